from .app import create_app
from .auth import AuthRequired, InvalidCredentials, SessionStore, SessionToken, login
from .jsonld import article_html, article_jsonld, canonical_bytes, landing_html
from .portal import LandingPageView, Portal

__all__ = [
    "AuthRequired",
    "InvalidCredentials",
    "LandingPageView",
    "Portal",
    "SessionStore",
    "SessionToken",
    "article_html",
    "article_jsonld",
    "canonical_bytes",
    "create_app",
    "landing_html",
    "login",
]
