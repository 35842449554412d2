"""
Configuration management using Pydantic Settings

Supports environment variables and .env files. CLI flags override these
defaults; library calls take explicit config objects built from them.
"""
from typing import Optional
from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field


class LossSettings(BaseSettings):
    """EIE + cross-entropy loss weights"""
    alpha: float = Field(default=1.0, gt=0, description="Weight of the prediction field in D")
    lambda1: float = Field(default=1.0, ge=0, description="EIE loss weight")
    lambda2: float = Field(default=1.0, ge=0, description="Cross-entropy weight")

    model_config = SettingsConfigDict(
        env_prefix="EIE_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore"
    )


class EvolveSettings(BaseSettings):
    """Curve-evolution simulator settings"""
    threshold: float = 0.5
    unstable_patience: int = 10  # consecutive energy increases before warning
    snapshot_every: int = 50

    model_config = SettingsConfigDict(
        env_prefix="EVOLVE_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore"
    )


class TrainSettings(BaseSettings):
    """Toy trainer defaults"""
    epochs: int = Field(default=200, ge=1)
    learning_rate: float = Field(default=0.5, gt=0)
    size: int = Field(default=32, ge=16)
    train_count: int = Field(default=6, ge=1)
    val_count: int = Field(default=4, ge=1)
    scene_kind: str = "mixed"
    init_scale: float = 0.01

    model_config = SettingsConfigDict(
        env_prefix="TRAIN_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore"
    )


class MetricSettings(BaseSettings):
    """Evaluation metric parameters"""
    tusimple_tol_px: int = 5
    tusimple_lane_accuracy: float = 0.85
    lane_iou_threshold: float = 0.5
    mask_threshold: float = 0.5

    model_config = SettingsConfigDict(
        env_prefix="METRIC_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore"
    )


class AppConfig(BaseSettings):
    """Main application configuration"""
    # Sub-configurations
    loss: LossSettings = Field(default_factory=LossSettings)
    evolve: EvolveSettings = Field(default_factory=EvolveSettings)
    train: TrainSettings = Field(default_factory=TrainSettings)
    metrics: MetricSettings = Field(default_factory=MetricSettings)

    log_level: str = Field(default="INFO", description="Logging level")

    model_config = SettingsConfigDict(
        env_prefix="APP_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    @classmethod
    def load(cls) -> "AppConfig":
        """Load configuration from environment"""
        return cls(
            loss=LossSettings(),
            evolve=EvolveSettings(),
            train=TrainSettings(),
            metrics=MetricSettings()
        )


# Global config instance
_config: Optional[AppConfig] = None


def get_config() -> AppConfig:
    """Get global configuration instance"""
    global _config
    if _config is None:
        _config = AppConfig.load()
    return _config


def reload_config() -> AppConfig:
    """Reload configuration from environment"""
    global _config
    _config = AppConfig.load()
    return _config
