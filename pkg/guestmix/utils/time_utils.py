"""
Time utilities: timestamps for log file names and date parsing for reviews.
"""
import datetime
from typing import Optional

from guestmix._config import DATE_FORMAT


def get_now_str() -> str:
    """Return current time in unified format: YYYY-MM-DD_HH-MM-SS."""
    return datetime.datetime.now().strftime("%Y-%m-%d_%H-%M-%S")


def parse_date(value: Optional[str]) -> Optional[datetime.date]:
    """Parse an ISO-8601 date or datetime string; empty values give ``None``.

    Raises ``ValueError`` for non-empty strings that are not ISO dates.
    """
    if value is None:
        return None
    text = str(value).strip()
    if not text:
        return None
    try:
        return datetime.date.fromisoformat(text[:10])
    except ValueError:
        return datetime.datetime.fromisoformat(text.replace("Z", "+00:00")).date()


def format_date(value: Optional[datetime.date]) -> Optional[str]:
    return value.strftime(DATE_FORMAT) if value is not None else None
