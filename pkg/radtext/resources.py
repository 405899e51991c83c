# radtext/resources.py
"""
This is the file that copies the bundled resources into a user directory,
so they can be edited and pointed to with RADTEXT_RESOURCES.
"""
import filecmp
import os
import shutil

try:
    from radtext import config
    from radtext.errors import ConfigError
except ImportError:
    import config
    from errors import ConfigError

logger = config.get_logger("download")

USER_RESOURCES_DIR = os.path.join(os.path.expanduser("~"), ".radtext", "resources")


def download(target=None, source=None):
    """This fct copies every resource file into ``target``.

    Files that are already there with the same content are left alone, so
    running it twice changes nothing. A file that differs is overwritten.

    Parameters
    target : str or None
        Destination directory (default ``~/.radtext/resources``).
    source : str or None
        Where to copy from (default: the bundled directory).

    Returns
    list of str
        Names of the files actually written.
    """
    target = target or USER_RESOURCES_DIR
    source = source or config.DEFAULT_RESOURCES_DIR
    try:
        os.makedirs(target, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"cannot create {target}: {e}") from None
    written = []
    for name in config.RESOURCE_FILES:
        src = os.path.join(source, name)
        dst = os.path.join(target, name)
        if not os.path.exists(src):
            raise ConfigError(f"bundled resource {name} is missing from {source}")
        if os.path.exists(dst) and filecmp.cmp(src, dst, shallow=False):
            continue
        shutil.copyfile(src, dst)
        written.append(name)
    logger.info("DOWNLOADED target=%s written=%d", target, len(written))
    return written
