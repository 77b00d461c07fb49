"""Application factory."""

from flask import Flask

from app.routes import reports, webhooks


def create_app() -> Flask:
    app = Flask(__name__)
    app.register_blueprint(reports.bp)
    app.register_blueprint(webhooks.bp)

    @app.get("/health")
    def health():
        return "ok"

    return app
