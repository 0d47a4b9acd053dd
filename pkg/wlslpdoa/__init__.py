from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("WlsLpDoa")
except PackageNotFoundError:
    __version__ = "Please install this project with poetry"
