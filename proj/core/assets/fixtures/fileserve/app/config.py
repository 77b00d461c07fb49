"""Deployment settings. The signing key lives outside the report directory."""

SECRET_KEY_FILE = "/srv/app/config/secret.key"
REPORT_DIR = "/srv/app/data/reports"
