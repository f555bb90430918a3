from .parser import Parser
from .errors import ConfigError, MissingKey
