"""Outgoing webhook configuration."""

import requests
from flask import Blueprint, request

bp = Blueprint("webhooks", __name__)


@bp.post("/webhooks/test")
def test_webhook():
    """Deliver a test event so users can check their endpoint."""
    payload = request.get_json(silent=True) or {}
    url = payload.get("url", "")
    if not url.startswith(("http://", "https://")):
        return {"error": "url must be http(s)"}, 400
    response = requests.get(url, timeout=3)
    return {"delivered": True, "status": response.status_code}
