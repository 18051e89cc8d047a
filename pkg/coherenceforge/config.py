"""
Configuration management for CoherenceForge
"""

import os
import yaml
import json
from pathlib import Path
from typing import Dict, Any, Optional, Union
from pydantic import BaseModel, Field, field_validator

from .models import OptimizerOptions
from .exceptions import ConfigurationError

DEFAULT_THREADS = 4


def _threads_from_env() -> int:
    value = os.getenv('COHERENCE_FORGE_THREADS')
    if not value:
        return DEFAULT_THREADS
    try:
        return int(value)
    except ValueError:
        raise ConfigurationError(f"COHERENCE_FORGE_THREADS must be an integer, got '{value}'")


class ForgeConfig(BaseModel):
    """Main configuration for CoherenceForge"""

    # Global settings
    log_level: str = "INFO"
    log_file: Optional[str] = None
    threads: int = Field(default_factory=_threads_from_env)

    # Verification defaults
    seed: int = 0
    trials: int = 100
    comparison_tol: float = 1e-8
    validation_tol: float = 1e-10
    ancilla_dim: Optional[int] = None

    optimizer: OptimizerOptions = Field(default_factory=OptimizerOptions)

    @field_validator('log_level')
    @classmethod
    def validate_log_level(cls, v):
        valid_levels = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']
        if v.upper() not in valid_levels:
            raise ValueError(f'Log level must be one of {valid_levels}')
        return v.upper()

    @field_validator('threads', 'trials')
    @classmethod
    def validate_at_least_one(cls, v):
        if v < 1:
            raise ValueError('threads and trials must be at least 1')
        return v

    @field_validator('comparison_tol', 'validation_tol')
    @classmethod
    def validate_tolerance(cls, v):
        if v <= 0:
            raise ValueError('tolerances must be positive')
        return v

    @field_validator('ancilla_dim')
    @classmethod
    def validate_ancilla_dim(cls, v):
        if v is not None and v < 1:
            raise ValueError('ancilla_dim must be positive')
        return v

    @classmethod
    def from_file(cls, file_path: Union[str, Path]) -> 'ForgeConfig':
        """Load configuration from file"""
        file_path = Path(file_path)

        if not file_path.exists():
            raise ConfigurationError(f"Configuration file not found: {file_path}")

        try:
            with open(file_path, 'r') as f:
                if file_path.suffix.lower() in ['.yaml', '.yml']:
                    data = yaml.safe_load(f)
                elif file_path.suffix.lower() == '.json':
                    data = json.load(f)
                else:
                    raise ConfigurationError(f"Unsupported file format: {file_path.suffix}")

            return cls.parse_config_data(data or {})

        except ConfigurationError:
            raise
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Invalid YAML in config file: {e}")
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Invalid JSON in config file: {e}")
        except Exception as e:
            raise ConfigurationError(f"Error reading config file: {e}")

    @classmethod
    def parse_config_data(cls, data: Dict[str, Any]) -> 'ForgeConfig':
        """Parse configuration data from dictionary"""
        try:
            config_data = {**data}
            if 'optimizer' in config_data:
                config_data['optimizer'] = OptimizerOptions(**(config_data['optimizer'] or {}))
            return cls(**config_data)

        except Exception as e:
            raise ConfigurationError(f"Error parsing configuration: {e}")

    def to_file(self, file_path: Union[str, Path]):
        """Save configuration to file"""
        file_path = Path(file_path)
        data = self.model_dump(mode='json')

        try:
            file_path.parent.mkdir(parents=True, exist_ok=True)

            with open(file_path, 'w') as f:
                if file_path.suffix.lower() in ['.yaml', '.yml']:
                    yaml.dump(data, f, default_flow_style=False, indent=2)
                elif file_path.suffix.lower() == '.json':
                    json.dump(data, f, indent=2)
                else:
                    raise ConfigurationError(f"Unsupported file format: {file_path.suffix}")

        except ConfigurationError:
            raise
        except Exception as e:
            raise ConfigurationError(f"Error writing config file: {e}")

    @classmethod
    def create_example_config(cls) -> 'ForgeConfig':
        """Create an example configuration"""
        return cls(
            log_level="INFO",
            threads=DEFAULT_THREADS,
            seed=20240101,
            trials=500,
            optimizer=OptimizerOptions(starts=20, max_iters=5000, tol=1e-10, seed=0),
        )


def load_config_from_env() -> ForgeConfig:
    """Load configuration from environment variables"""
    config_file = os.getenv('COHERENCE_FORGE_CONFIG')
    if config_file:
        config = ForgeConfig.from_file(config_file)
    else:
        config = ForgeConfig(log_level=os.getenv('COHERENCE_FORGE_LOG_LEVEL', 'INFO'))

    # Environment wins over the file for the concurrency cap and seed
    if os.getenv('COHERENCE_FORGE_THREADS'):
        config.threads = _threads_from_env()
        if config.threads < 1:
            raise ConfigurationError("COHERENCE_FORGE_THREADS must be at least 1")

    seed = os.getenv('COHERENCE_FORGE_SEED')
    if seed:
        try:
            config.seed = int(seed)
        except ValueError:
            raise ConfigurationError(f"COHERENCE_FORGE_SEED must be an integer, got '{seed}'")

    return config
