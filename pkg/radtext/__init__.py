# makes radtext a Python package
from radtext.pipeline import Pipeline

__all__ = ["Pipeline"]
