"""HTTP correction service backing the review UI.

The service is a thin, stateless veneer over one run directory: referrals
come from referrals.json, frames are rendered from the stored masks and
disagreement maps, and every accepted or corrected frame is appended to
corrections.json before the response goes out, so a killed and restarted
process resumes with nothing lost. Reads may run concurrently; writes are
serialized through one lock.
"""

from __future__ import annotations

import base64
import json
import threading
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import urlparse

import numpy as np

from .dqc import count_components, dice
from .errors import ConfigError, FormatError, PatchQcError
from .experiments import load_run, write_corrections
from .hitl import SOURCE_HUMAN, CorrectionRecord
from .overlay import gray_png, heatmap_png
from .rle import decode_rle, encode_rle
from .util import jsonable, parse_float

API_VERSION = 1

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
}

_PLACEHOLDER_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>patchqc review</title></head>
<body><h1>patchqc review service</h1>
<p>No UI bundle is installed. The JSON API is live under <code>/api/</code>:
referrals, frame/{slice}/{t}, corrections, progress, series/{slice}.</p>
</body></html>
"""


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


class RunSession:
    """In-memory view of one run directory plus its correction log."""

    def __init__(self, run_dir):
        self.run_dir = Path(run_dir)
        self.lock = threading.RLock()
        self.run = load_run(self.run_dir)
        ref_path = self.run_dir / "referrals.json"
        if not ref_path.is_file():
            raise ConfigError(f"{self.run_dir} has no referrals.json; run the "
                              "referral stage before serving")
        doc = json.loads(ref_path.read_text())
        self.referrals = [(e["slice"], int(e["t"]), parse_float(e["q_frame"]),
                           int(e["rank"]))
                          for e in doc.get("selected", [])]
        self.masks = {sid: m.copy() for sid, m in self.run.masks.items()}
        self.dqc = {o.slice_id: o.dqc_map for o in self.run.outcomes}
        self.qc = {o.qc.slice_id: o.qc for o in self.run.outcomes}
        self.records: list[CorrectionRecord] = []
        self.status: dict[tuple, str] = {}
        self._corrections_path = self.run_dir / "corrections.json"
        if self._corrections_path.is_file():
            stored = json.loads(self._corrections_path.read_text())
            for obj in stored:
                self._absorb(CorrectionRecord.from_jsonable(obj))

    def _absorb(self, rec: CorrectionRecord) -> None:
        # later records win, which is what sequential review sessions mean
        self.records.append(rec)
        mask = self.masks.get(rec.slice_id)
        if mask is None or not 0 <= rec.t < mask.dims[2]:
            raise ConfigError(f"correction log references unknown frame "
                              f"{rec.slice_id!r}/{rec.t}")
        if rec.corrected:
            mask.bits[rec.t] = rec.mask_after
        self.status[(rec.slice_id, rec.t)] = (
            "corrected" if rec.corrected else "accepted")

    def _persist(self) -> None:
        write_corrections(self.records, self._corrections_path)

    def _frame_exists(self, slice_id: str, t: int) -> bool:
        mask = self.masks.get(slice_id)
        return mask is not None and 0 <= t < mask.dims[2]

    def queue(self) -> list[dict]:
        with self.lock:
            return [{"slice": sid, "t": t, "q_frame": q, "rank": rank,
                     "status": self.status.get((sid, t), "pending")}
                    for sid, t, q, rank in self.referrals]

    def progress(self) -> dict:
        with self.lock:
            states = [self.status.get((sid, t), "pending")
                      for sid, t, _, _ in self.referrals]
            return {"total": len(states),
                    "pending": states.count("pending"),
                    "accepted": states.count("accepted"),
                    "corrected": states.count("corrected")}

    def frame(self, slice_id: str, t: int) -> dict:
        with self.lock:
            if not self._frame_exists(slice_id, t):
                raise KeyError(f"no frame {slice_id}/{t}")
            mask = self.masks[slice_id]
            image = self.run.images[slice_id]
            dqc_frame = self.dqc[slice_id][t]
            bits = mask.bits[t]
            truth = self.run.truths.get(slice_id)
            lo, hi = float(dqc_frame.min()), float(dqc_frame.max())
            q = float(self.qc[slice_id].q_frame[t])
            return {
                "slice": slice_id, "t": t, "T": mask.dims[2],
                "dims": [mask.dims[0], mask.dims[1]],
                "image_png": _b64(gray_png(image.data[t])),
                "dqc_png": _b64(heatmap_png(dqc_frame, lo, hi)),
                "dqc_min": lo, "dqc_max": hi,
                "mask_rle": encode_rle(bits),
                "q_frame": q,
                "area": int(bits.sum()),
                "component_count": count_components(bits),
                "dice_2d": dice(bits, truth.bits[t]) if truth is not None else None,
                "status": self.status.get((slice_id, t), "pending"),
                "referred": any(sid == slice_id and ft == t
                                for sid, ft, _, _ in self.referrals),
            }

    def series(self, slice_id: str) -> dict:
        with self.lock:
            qc = self.qc.get(slice_id)
            if qc is None:
                raise KeyError(f"no slice {slice_id}")
            return {
                "slice": slice_id,
                "q_frame": list(qc.q_frame),
                "q_slice": qc.q_slice,
                "area": [int(a) for a in qc.area],
                "sentinel_count": qc.sentinel_count,
                "referred_frames": sorted(t for sid, t, _, _ in self.referrals
                                          if sid == slice_id),
            }

    def submit(self, body: dict) -> dict:
        """Handle one POST /api/corrections payload; persists before returning."""
        if not isinstance(body, dict):
            raise FormatError("body must be a JSON object")
        slice_id = body.get("slice")
        t = body.get("t")
        if not isinstance(slice_id, str) or not isinstance(t, int) or isinstance(t, bool):
            raise FormatError("body needs string 'slice' and integer 't'")
        accept = body.get("accept", False)
        mask_rle = body.get("mask_rle")
        if accept is not True and mask_rle is None:
            raise FormatError("body needs either accept:true or mask_rle")
        if accept is True and mask_rle is not None:
            raise FormatError("accept:true and mask_rle are mutually exclusive")
        with self.lock:
            if not self._frame_exists(slice_id, t):
                raise KeyError(f"no frame {slice_id}/{t}")
            mask = self.masks[slice_id]
            M, N = mask.dims[0], mask.dims[1]
            before = mask.bits[t].copy()
            if accept is True:
                after = before.copy()
                corrected = False
            else:
                after = decode_rle(mask_rle, (M, N))
                corrected = not np.array_equal(after, before)
            rec = CorrectionRecord(
                slice_id=slice_id, t=t, corrected=corrected,
                mask_before=before, mask_after=after, source=SOURCE_HUMAN,
                timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"))
            self._absorb(rec)
            self._persist()
            truth = self.run.truths.get(slice_id)
            bits = mask.bits[t]
            return {
                "slice": slice_id, "t": t, "corrected": corrected,
                "status": self.status[(slice_id, t)],
                "area": int(bits.sum()),
                "component_count": count_components(bits),
                "dice_2d": dice(bits, truth.bits[t]) if truth is not None else None,
                "progress": self.progress(),
            }


class _Handler(BaseHTTPRequestHandler):
    server_version = "patchqc"

    # ---- plumbing -------------------------------------------------------
    def log_message(self, fmt, *args):
        pass

    def _send_json(self, code: int, payload: dict) -> None:
        # jsonable() keeps non-finite floats out of the wire format
        body = json.dumps(jsonable({"version": API_VERSION, **payload}),
                          allow_nan=False).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Cache-Control", "no-store")
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, code: int, message: str) -> None:
        self._send_json(code, {"error": message})

    def _send_bytes(self, data: bytes, content_type: str) -> None:
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    # ---- routes ---------------------------------------------------------
    def do_GET(self):
        session = self.server.session
        path = urlparse(self.path).path
        try:
            if path == "/api/referrals":
                self._send_json(200, {"referrals": session.queue()})
            elif path == "/api/progress":
                self._send_json(200, session.progress())
            elif path.startswith("/api/frame/"):
                parts = path[len("/api/frame/"):].split("/")
                if len(parts) != 2 or not parts[1].lstrip("-").isdigit():
                    self._send_error_json(404, "expected /api/frame/{slice}/{t}")
                    return
                self._send_json(200, session.frame(parts[0], int(parts[1])))
            elif path.startswith("/api/series/"):
                slice_id = path[len("/api/series/"):]
                self._send_json(200, session.series(slice_id))
            elif path.startswith("/api/"):
                self._send_error_json(404, f"unknown endpoint {path}")
            else:
                self._serve_static(path)
        except KeyError as exc:
            self._send_error_json(404, str(exc))
        except PatchQcError as exc:
            self._send_error_json(400, str(exc))

    def do_POST(self):
        session = self.server.session
        path = urlparse(self.path).path
        if path != "/api/corrections":
            self._send_error_json(404, f"unknown endpoint {path}")
            return
        try:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length)
            try:
                body = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise FormatError(f"body is not valid JSON: {exc}") from exc
            self._send_json(200, session.submit(body))
        except KeyError as exc:
            self._send_error_json(404, str(exc))
        except PatchQcError as exc:
            self._send_error_json(400, str(exc))

    def _serve_static(self, path: str) -> None:
        ui_dir = self.server.ui_dir
        rel = path.lstrip("/") or "index.html"
        if ui_dir is None:
            if rel == "index.html":
                self._send_bytes(_PLACEHOLDER_PAGE.encode("utf-8"),
                                 _CONTENT_TYPES[".html"])
            else:
                self._send_error_json(404, f"no static file {path}")
            return
        target = (ui_dir / rel).resolve()
        if not target.is_relative_to(ui_dir.resolve()) or not target.is_file():
            self._send_error_json(404, f"no static file {path}")
            return
        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self._send_bytes(target.read_bytes(), ctype)


def default_ui_dir() -> Path | None:
    packaged = Path(__file__).parent / "ui"
    return packaged if (packaged / "index.html").is_file() else None


def make_server(run_dir, bind: str = "127.0.0.1", port: int = 0,
                ui_dir=None) -> ThreadingHTTPServer:
    """Build (but do not start) the service; port 0 picks a free port."""
    session = RunSession(run_dir)
    server = ThreadingHTTPServer((bind, port), _Handler)
    server.session = session
    server.ui_dir = Path(ui_dir) if ui_dir is not None else default_ui_dir()
    return server


def serve(run_dir, bind: str = "127.0.0.1", port: int = 8080, ui_dir=None) -> None:
    """Run the service until interrupted; prints the bound address first."""
    server = make_server(run_dir, bind, port, ui_dir)
    host, bound_port = server.server_address[:2]
    print(f"serving {run_dir} on http://{host}:{bound_port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
