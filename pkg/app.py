from flask import Flask, request, jsonify, send_file
import logging
import os
import re
from io import BytesIO
from reportlab.lib.pagesizes import A4
from reportlab.pdfgen import canvas

from config import TOOL_NAME, TOOL_VERSION
from engines.config import OUT_DIR
from engines.experiment_engine import ExperimentEngine
from utils.exporters import config_hash
from utils.validators import FORMATS, KINDS, U64_MAX, ConfigError, parse_config

app = Flask(__name__)
logger = logging.getLogger(__name__)


def valid_seed(seed):
    return isinstance(seed, int) and not isinstance(seed, bool) and 0 <= seed <= U64_MAX


def valid_formats(formats):
    return isinstance(formats, list) and formats and all(f in FORMATS for f in formats)


@app.route("/", methods=["GET"])
def index():
    return jsonify({
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "kinds": list(KINDS),
        "formats": list(FORMATS),
        "routes": ["POST /run", "POST /report"],
    })


@app.route("/run", methods=["POST"])
def run():
    data = request.get_json(silent=True) or {}
    text = data.get("config") if data else request.get_data(as_text=True)
    seed = data.get("seed")
    formats = data.get("formats")

    if not text or not isinstance(text, str):
        return jsonify({"error": "Missing config text"}), 400
    if seed is not None and not valid_seed(seed):
        return jsonify({"error": "Seed must be an unsigned 64-bit integer"}), 400
    if formats is not None and not valid_formats(formats):
        return jsonify({"error": f"Formats must be a non-empty list drawn from {list(FORMATS)}"}), 400

    try:
        cfg = parse_config(text)
    except ConfigError as e:
        return jsonify({"error": "Invalid config", "issues": [str(i) for i in e.issues]}), 400
    if seed is not None:
        cfg = cfg.with_seeds([seed])
    if formats:
        cfg = cfg.with_formats(formats)

    # same config and seeds land in the same directory
    run_id = config_hash(text)[:12] + "-" + "-".join(str(s) for s in cfg.seeds[:1])
    out_dir = os.path.join(OUT_DIR, cfg.kind, run_id)
    try:
        engine = ExperimentEngine(cfg, out_dir, jobs=1)
        manifest = engine.run()
    except Exception as e:
        logger.exception("run failed")
        return jsonify({"error": f"Run Failed: {str(e)}"}), 500

    return jsonify({
        "manifest": manifest,
        "summary": engine.summary,
        "out_dir": out_dir,
    })


@app.route("/report", methods=["POST"])
def report():
    data = request.get_json() or {}
    manifest = data.get("manifest", {}) or {}
    summary = data.get("summary", {}) or {}

    if not manifest:
        return jsonify({"error": "Missing manifest"}), 400

    buffer = BytesIO()
    c = canvas.Canvas(buffer, pagesize=A4)
    width, height = A4
    y = height - 40

    def line(text, size=11, dy=14, bold=False):
        nonlocal y
        if y < 60:
            c.showPage()
            y = height - 40
        c.setFont("Helvetica-Bold" if bold else "Helvetica", size)
        c.drawString(40, y, str(text)[:120])
        y -= dy

    line(f"{TOOL_NAME.capitalize()} Run Report", size=16, dy=24, bold=True)
    line("----------------------------------------", dy=18)

    line(f"Experiment: {manifest.get('kind', 'N/A')}", bold=True)
    line(f"Tool Version: {manifest.get('version', 'N/A')}")
    line(f"Config SHA-256: {manifest.get('config_sha256', 'N/A')}")
    seeds = manifest.get("seeds", [])
    line(f"Seeds ({len(seeds)}): {', '.join(str(s) for s in seeds[:8])}{' ...' if len(seeds) > 8 else ''}")
    line(f"Formats: {', '.join(manifest.get('formats', []))}", dy=18)

    line("Summary:", bold=True, dy=16)
    if summary:
        for key, value in summary.items():
            if isinstance(value, dict):
                line(f"{key}:")
                for sub_key, sub_value in value.items():
                    for chunk in re.findall(r".{1,95}(?:\s+|$)", f"  {sub_key}: {sub_value}"):
                        line(chunk.rstrip())
            else:
                line(f"{key}: {value}")
    else:
        line("No summary provided")

    line("", dy=16)
    artifacts = manifest.get("artifacts", [])
    line(f"Artifacts ({len(artifacts)}):", bold=True, dy=16)
    for name in artifacts:
        line(f"- {name}")

    c.showPage()
    c.save()
    buffer.seek(0)

    return send_file(
        buffer,
        as_attachment=True,
        download_name=f"{TOOL_NAME}-{manifest.get('kind', 'run')}-report.pdf",
        mimetype="application/pdf"
    )


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    app.run(debug=True)
