import glob
import logging
import logging.handlers
import os
from datetime import datetime, timedelta
from typing import Optional

from app.core.config import settings

_configured = False


def cleanup_old_logs(log_dir: Optional[str] = None) -> int:
    """Remove rotated log files older than the configured retention period."""
    log_dir = log_dir or settings.log_dir
    if not os.path.exists(log_dir):
        return 0

    cutoff_date = datetime.now() - timedelta(days=settings.log_cleanup_days)
    cleaned_count = 0
    for log_file in glob.glob(os.path.join(log_dir, "*.log.*")):
        try:
            file_time = datetime.fromtimestamp(os.path.getmtime(log_file))
            if file_time < cutoff_date:
                os.remove(log_file)
                cleaned_count += 1
        except OSError as e:
            logging.getLogger(__name__).warning(f"Could not remove log file {log_file}: {e}")
    return cleaned_count


def setup_logging(level: Optional[str] = None, log_to_file: Optional[bool] = None) -> None:
    """Configure the root logger once: rotating file plus standard error."""
    global _configured
    if _configured and level is None:
        return

    log_level = getattr(logging, (level or settings.log_level).upper(), logging.INFO)
    to_file = settings.log_to_file if log_to_file is None else log_to_file

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    # Remove existing handlers to avoid duplicates
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    # Console output goes to stderr; stdout is reserved for command results
    console_handler = logging.StreamHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    cleaned = 0
    if to_file:
        os.makedirs(settings.log_dir, exist_ok=True)
        cleaned = cleanup_old_logs(settings.log_dir)
        file_handler = logging.handlers.RotatingFileHandler(
            os.path.join(settings.log_dir, settings.log_file_name),
            maxBytes=settings.log_max_file_size_mb * 1024 * 1024,
            backupCount=settings.log_backup_count,
            encoding='utf-8'
        )
        file_handler.setLevel(log_level)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    logging.getLogger("uvicorn.access").setLevel(logging.WARNING)
    logging.getLogger("multipart").setLevel(logging.WARNING)

    _configured = True
    if to_file:
        total_max_size = settings.log_max_file_size_mb * (settings.log_backup_count + 1)
        logging.debug(f"Logging setup completed: {settings.log_max_file_size_mb}MB per file, "
                      f"{settings.log_backup_count} backups, max total: {total_max_size}MB, "
                      f"{cleaned} expired files removed")


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance."""
    return logging.getLogger(name)
