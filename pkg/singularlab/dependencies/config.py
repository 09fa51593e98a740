from singularlab.config import Config, load_config


def get_config() -> Config:
    """
    Resolve the run configuration for a request.

    Returns:
        Config: The config read from the file named by `SINGULARLAB_CONFIG`, or the defaults.

    Raises:
        InputError: If the config file is missing or holds an unknown or invalid key.
    """
    return load_config()
