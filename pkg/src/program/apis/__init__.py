from .chat_api import ChatAPI, ChatAPIError
