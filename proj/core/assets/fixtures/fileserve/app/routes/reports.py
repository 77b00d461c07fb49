"""Report download endpoints."""

import os

from flask import Blueprint, abort, request, send_file

bp = Blueprint("reports", __name__)

REPORT_DIR = "/srv/app/data/reports"


@bp.get("/reports")
def list_reports():
    return {"reports": sorted(os.listdir(REPORT_DIR))}


@bp.get("/download")
def download():
    name = request.args.get("file", "")
    if not name:
        abort(400, "missing file parameter")
    path = os.path.join(REPORT_DIR, name)
    if not os.path.isfile(path):
        abort(404)
    return send_file(path)
