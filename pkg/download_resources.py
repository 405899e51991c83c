"""
This is the resource initializer.
It copies the bundled vocabularies, rules and patterns into the user resource
directory (or the one given on the command line).
"""
import sys

from radtext.resources import USER_RESOURCES_DIR, download


def initialize_resources(target=None):

    """This fct will populate the resource directory.

    It is safe to run again: files that did not change are skipped.
    """
    target = target or USER_RESOURCES_DIR
    print(f"Copying resources to {target}...")
    written = download(target)
    print(f"Resources are ready ({len(written)} file(s) written)!")


if __name__ == "__main__":
    initialize_resources(sys.argv[1] if len(sys.argv) > 1 else None)
