# Utilities package

from .timing import get_utc_now, get_utc_timestamp, Stopwatch
from .seeding import substream, derive_seed
