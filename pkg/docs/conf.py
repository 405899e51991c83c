# Configuration file for the Sphinx documentation builder.

import os
import sys
sys.path.insert(0, os.path.abspath(".."))
project = 'radtext'
copyright = '2025, radtext developers'
author = 'radtext developers'
release = 'v1'

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
]

# autodoc imports config, which opens the log file
os.environ.setdefault("RADTEXT_LOG_DIR", os.path.abspath("_build/logs"))

templates_path = ['_templates']
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

html_theme = 'sphinx_rtd_theme'
html_static_path = ['_static']
