from .structured_logging import PipelineLogger, configure_structured_logging, get_logger

__all__ = ["PipelineLogger", "configure_structured_logging", "get_logger"]
