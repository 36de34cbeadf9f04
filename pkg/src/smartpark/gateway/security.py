"""Password hashing and compact signed tokens for the gateway.

Passwords: PBKDF2-HMAC-SHA256 with a fresh random salt per hash. The
``rounds`` parameter is a cost exponent (iterations = 2**rounds), and both
salt and rounds are embedded in the hash string, so verification needs no
out-of-band state and old hashes survive a cost change.

Tokens: three-part compact form ``header.payload.signature`` with an
HMAC-SHA256 signature keyed by the server secret. Any byte flip breaks
verification; expiry is checked against the caller's clock.
"""
from __future__ import annotations

import base64
import hashlib
import hmac
import json
import secrets
import time
from typing import Optional

from smartpark.errors import AuthError, ValidationError

MIN_ROUNDS = 4
DEFAULT_ROUNDS = 10
TOKEN_LIFETIME_S = 24 * 60 * 60
_SCHEME = "pbkdf2-sha256"


def hash_password(password: str, rounds: int = DEFAULT_ROUNDS) -> str:
    if not password:
        raise ValidationError("password must not be empty")
    if rounds < MIN_ROUNDS:
        raise ValidationError(f"rounds must be >= {MIN_ROUNDS}")
    salt = secrets.token_bytes(16)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, 2**rounds)
    return f"{_SCHEME}${rounds}${salt.hex()}${digest.hex()}"


def verify_password(password: str, stored: str) -> bool:
    try:
        scheme, rounds_s, salt_hex, digest_hex = stored.split("$")
        if scheme != _SCHEME:
            return False
        rounds = int(rounds_s)
        salt = bytes.fromhex(salt_hex)
        expected = bytes.fromhex(digest_hex)
    except (ValueError, AttributeError):
        return False
    digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, 2**rounds)
    return hmac.compare_digest(digest, expected)


def _b64url(raw: bytes) -> str:
    return base64.urlsafe_b64encode(raw).rstrip(b"=").decode("ascii")


def _unb64url(text: str) -> bytes:
    padding = "=" * (-len(text) % 4)
    return base64.urlsafe_b64decode(text + padding)


class TokenSigner:
    def __init__(self, secret: bytes, lifetime_s: int = TOKEN_LIFETIME_S):
        if not secret:
            raise ValidationError("token secret must not be empty")
        self._secret = secret
        self.lifetime_s = lifetime_s

    def _sign(self, material: bytes) -> bytes:
        return hmac.new(self._secret, material, hashlib.sha256).digest()

    def issue(self, account_id: str, now_s: Optional[int] = None) -> str:
        now = int(time.time()) if now_s is None else now_s
        header = _b64url(json.dumps({"alg": "HS256", "typ": "access"}).encode())
        payload = _b64url(
            json.dumps(
                {"sub": account_id, "iat": now, "exp": now + self.lifetime_s},
                sort_keys=True,
            ).encode()
        )
        signature = _b64url(self._sign(f"{header}.{payload}".encode("ascii")))
        return f"{header}.{payload}.{signature}"

    def verify(self, token: str, now_s: Optional[int] = None) -> str:
        """Returns the account id; raises AuthError on any defect."""
        now = int(time.time()) if now_s is None else now_s
        try:
            header, payload, signature = token.split(".")
            expected = self._sign(f"{header}.{payload}".encode("ascii"))
            if not hmac.compare_digest(_unb64url(signature), expected):
                raise AuthError("token signature invalid")
            claims = json.loads(_unb64url(payload))
        except AuthError:
            raise
        except Exception:
            raise AuthError("token malformed") from None
        if not isinstance(claims, dict) or "sub" not in claims or "exp" not in claims:
            raise AuthError("token claims incomplete")
        if now >= int(claims["exp"]):
            raise AuthError("token expired")
        return str(claims["sub"])


def strip_bearer(value: str) -> str:
    """Drop a leading 'Bearer ' scheme tag if present."""
    if value.startswith("Bearer "):
        return value[7:]
    return value
