"""Mock model service used by tests, demos, and frontend development.

Serves the same wire protocol the real model endpoints would:

* ``POST /dextr``    {image_id, points: {left, right, top, bottom}, padding}
                     -> {polygons: [[x1, y1, ...]]}; default mode echoes the
                     padded extreme-point rectangle, canned responses (keyed
                     by image_id) override it
* ``POST /segment``  {image_id} -> {detections: [{category, polygons,
                     confidence}]} from the canned table
* ``GET /images/<keyword>/<index>.png`` deterministic generated PNGs for
                     exercising the HTTP image-search provider

Canned entries may be ``{"error": "..."}`` to simulate model failures.
"""

from __future__ import annotations

import io
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from PIL import Image


def _rectangle_from_extremes(points: dict, padding: float) -> list[float]:
    x0 = points["left"][0] - padding
    x1 = points["right"][0] + padding
    y0 = points["top"][1] - padding
    y1 = points["bottom"][1] + padding
    return [x0, y0, x1, y0, x1, y1, x0, y1]


def _generated_png(keyword: str, index: int) -> bytes:
    shade = (hash((keyword, index)) % 200 + 30, 40 + 13 * (index % 16), 90)
    img = Image.new("RGB", (24, 16), shade)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


class MockModelServer:
    """In-process HTTP server with canned model behaviour."""

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        detections: dict[int, list] | None = None,
        dextr_responses: dict[int, dict] | None = None,
        search_image_count: int = 5,
    ):
        self.detections = detections or {}
        self.dextr_responses = dextr_responses or {}
        self.search_image_count = search_image_count
        self._server = ThreadingHTTPServer((host, port), self._make_handler())
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "MockModelServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread:
            self._thread.join(timeout=5)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    def _make_handler(self):
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _reply(self, payload: dict, status: int = 200):
                body = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def _reply_bytes(self, body: bytes, content_type: str):
                self.send_response(200)
                self.send_header("Content-Type", content_type)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_POST(self):
                length = int(self.headers.get("Content-Length", "0"))
                try:
                    payload = json.loads(self.rfile.read(length) or b"{}")
                except json.JSONDecodeError:
                    self._reply({"error": "bad json"}, status=400)
                    return
                if self.path == "/dextr":
                    canned = outer.dextr_responses.get(payload.get("image_id"))
                    if canned is not None:
                        status = 500 if "error" in canned else 200
                        self._reply(canned, status=status)
                        return
                    ring = _rectangle_from_extremes(
                        payload["points"], payload.get("padding", 0)
                    )
                    self._reply({"polygons": [ring]})
                elif self.path == "/segment":
                    canned = outer.detections.get(payload.get("image_id"), [])
                    if isinstance(canned, dict) and "error" in canned:
                        self._reply(canned, status=500)
                        return
                    self._reply({"detections": canned})
                else:
                    self._reply({"error": "not found"}, status=404)

            def do_GET(self):
                parts = self.path.strip("/").split("/")
                if len(parts) == 3 and parts[0] == "images":
                    keyword, name = parts[1], parts[2]
                    try:
                        index = int(name.split(".")[0])
                    except ValueError:
                        self._reply({"error": "bad index"}, status=404)
                        return
                    if index >= outer.search_image_count:
                        self._reply({"error": "exhausted"}, status=404)
                        return
                    self._reply_bytes(_generated_png(keyword, index), "image/png")
                else:
                    self._reply({"error": "not found"}, status=404)

        return Handler
