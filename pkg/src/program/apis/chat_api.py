from typing import Optional

from program.utils.logging import logger
from program.utils.request import (
    BaseRequestHandler,
    HttpMethod,
    ResponseObject,
    Session,
    create_service_session,
    get_rate_limit_params,
    get_retry_policy,
)


class ChatAPIError(Exception):
    """Base exception for ChatAPI related errors"""


class ChatRequestHandler(BaseRequestHandler):
    def __init__(self, session: Session, base_url: str, timeout: float = 60):
        super().__init__(session, base_url=base_url, custom_exception=ChatAPIError, timeout=timeout)

    def execute(self, method: HttpMethod, endpoint: str, **kwargs) -> ResponseObject:
        return super()._request(method, endpoint, **kwargs)


class ChatAPI:
    """Handles communication with a chat-completions compatible endpoint.

    Every request is sent with temperature 0 so replies are greedy-decoded.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: Optional[str] = None,
        timeout: float = 60,
        retries: int = 3,
        backoff_factor: float = 0.5,
        requests_per_minute: Optional[int] = None,
    ):
        self.model = model
        rate_limit_params = get_rate_limit_params(per_minute=requests_per_minute) if requests_per_minute else None
        session = create_service_session(
            rate_limit_params=rate_limit_params,
            retry_policy=get_retry_policy(retries=retries, backoff_factor=backoff_factor),
        )
        if api_key:
            session.headers.update({"Authorization": f"Bearer {api_key}"})
        self.request_handler = ChatRequestHandler(session, base_url=endpoint.rstrip("/"), timeout=timeout)

    def complete(self, prompt: str, system: Optional[str] = None) -> str:
        """Send one user message and return the first choice's content."""
        messages = [{"role": "system", "content": system}] if system else []
        messages.append({"role": "user", "content": prompt})
        response = self.request_handler.execute(
            HttpMethod.POST, "", json={"model": self.model, "messages": messages, "temperature": 0}
        )
        try:
            content = response.data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise ChatAPIError(f"Malformed completion response from {self.request_handler.BASE_URL}")
        if not isinstance(content, str) or not content.strip():
            raise ChatAPIError("Completion response is empty")
        logger.log("BACKEND", f"{self.model} replied with {len(content)} characters")
        return content.strip()
