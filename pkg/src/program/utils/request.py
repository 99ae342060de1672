"""HTTP plumbing shared by the remote backends.

Sessions carry a urllib3 retry policy and, optionally, a client-side rate
limiter. Handlers turn transport failures into the backend's own exception
type so callers never see raw ``requests`` errors.
"""
from enum import Enum
from typing import Any, Optional, Type

from loguru import logger
from pyrate_limiter import Duration, Limiter, MemoryQueueBucket, RequestRate
from requests import Session
from requests.adapters import HTTPAdapter
from requests.exceptions import ConnectTimeout, HTTPError, RequestException
from requests.models import Response
from requests_ratelimiter import LimiterSession
from urllib3.util.retry import Retry

TIMEOUT_STATUSES = frozenset({408, 460, 504, 520, 522, 524, 598, 599})
RETRY_STATUSES = (429, 500, 502, 503, 504)


class HttpMethod(Enum):
    GET = "GET"
    POST = "POST"


class RateLimitExceeded(Exception):
    """Raised when a backend answers 429"""
    def __init__(self, message, response=None):
        super().__init__(message)
        self.response = response


class ResponseObject:
    """A backend reply with its JSON body decoded into ``data``.

    Error statuses raise: timeouts as ``ConnectTimeout``, 429 as
    ``RateLimitExceeded`` and every other failure as ``RequestException``.
    A body that is empty, not JSON or not parseable decodes to ``{}``.
    """

    def __init__(self, response: Response):
        self.response = response
        self.status_code = response.status_code
        self.is_ok = response.ok
        self._raise_for_status()
        self.data = self._decode()

    def _raise_for_status(self):
        status = self.status_code
        if status in TIMEOUT_STATUSES:
            raise ConnectTimeout(f"Backend timed out with status {status}", response=self.response)
        if status == 429:
            raise RateLimitExceeded(f"Rate Limit Exceeded {status}", response=self.response)
        if not self.is_ok:
            kind = "Server" if status >= 500 else "Client"
            raise RequestException(f"{kind} error with status {status}", response=self.response)

    def _decode(self) -> Any:
        if "application/json" not in self.response.headers.get("Content-Type", "") or not self.response.content:
            return {}
        try:
            return self.response.json()
        except ValueError as e:
            logger.error(f"Failed to parse backend reply: {e}")
            return {}


class BaseRequestHandler:
    """Sends requests relative to ``base_url`` and maps failures to ``custom_exception``."""

    def __init__(self, session: Session | LimiterSession, base_url: str,
                 custom_exception: Optional[Type[Exception]] = None, timeout: float = 60):
        self.session = session
        self.BASE_URL = base_url.rstrip("/")
        self.custom_exception = custom_exception or Exception
        self.timeout = timeout

    def _request(self, method: HttpMethod, endpoint: str, **kwargs) -> ResponseObject:
        url = f"{self.BASE_URL}/{endpoint}".rstrip("/")
        kwargs.setdefault("timeout", self.timeout)
        logger.trace(f"{method.value} {url}")
        try:
            response = self.session.request(method.value, url, **kwargs)
            response.raise_for_status()
            return ResponseObject(response)
        except HTTPError as e:
            if e.response is not None and e.response.status_code == 429:
                raise RateLimitExceeded(f"Rate limit exceeded for {url}", response=e.response) from e
            raise self.custom_exception(f"Request failed: {e}") from e
        except RequestException as e:
            raise self.custom_exception(f"Request failed: {e}") from e


def get_rate_limit_params(
        per_second: Optional[int] = None,
        per_minute: Optional[int] = None,
        limit_statuses: Optional[list[int]] = None,
        max_delay: Optional[int] = None,
) -> dict[str, Any]:
    """
    In-memory rate limit parameters for a ``LimiterSession``.

    :param per_second: Requests per second limit.
    :param per_minute: Requests per minute limit.
    :param limit_statuses: Statuses that fill the bucket when returned (default 429).
    :param max_delay: Longest wait in seconds before a request is refused; None waits as long as needed.
    """
    rates = [RequestRate(limit, interval) for limit, interval in
             ((per_second, Duration.SECOND), (per_minute, Duration.MINUTE)) if limit]
    if not rates:
        raise ValueError("At least one rate limit (per_second or per_minute) must be specified.")
    return {
        "limiter": Limiter(*rates, bucket_class=MemoryQueueBucket),
        "bucket_class": MemoryQueueBucket,
        "limit_statuses": limit_statuses or [429],
        "max_delay": max_delay,
    }


def get_retry_policy(retries: int = 3, backoff_factor: float = 0.5, status_forcelist: Optional[list[int]] = None) -> Retry:
    """
    Retry policy for backend calls. POST is retried because every backend
    call is an idempotent, temperature-0 completion.

    :param retries: The maximum number of retry attempts.
    :param backoff_factor: Exponential backoff factor between attempts.
    :param status_forcelist: Statuses that force a retry.
    """
    return Retry(
        total=retries,
        backoff_factor=backoff_factor,
        status_forcelist=status_forcelist or list(RETRY_STATUSES),
        allowed_methods=frozenset({"GET", "POST"}),
        raise_on_status=False,
    )


def create_service_session(
        rate_limit_params: Optional[dict] = None,
        retry_policy: Optional[Retry] = None,
        pool_maxsize: int = 32,
) -> Session | LimiterSession:
    """
    Session for one backend, rate limited when ``rate_limit_params`` is given.

    The pool is sized for the worker threads that share a backend; a full
    pool blocks instead of opening extra connections.
    """
    session = LimiterSession(**rate_limit_params) if rate_limit_params else Session()
    adapter = HTTPAdapter(max_retries=retry_policy or 0, pool_maxsize=pool_maxsize, pool_block=True)
    session.mount("https://", adapter)
    session.mount("http://", adapter)
    return session
