from .log_utils import get_logger  # noqa: F401
from .time_utils import get_now_str  # noqa: F401
