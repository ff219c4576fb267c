"""Drive the HTTP service end to end: classify, correct, sync, leaderboard.

Run from the repository root:

    python demos/05_service_flow.py

Starts a real `wastesort serve` subprocess on a free port, talks to it
with plain urllib (no client library), and shuts it down at the end.
"""

import json
import socket
import subprocess
import sys
import time
import urllib.error
import urllib.request
import uuid
from pathlib import Path

from _common import OUTPUT_DIR, ensure_artifact


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def multipart(fields: dict[str, str], file_field: str, filename: str, blob: bytes):
    boundary = uuid.uuid4().hex
    parts = []
    for name, value in fields.items():
        parts.append(
            f'--{boundary}\r\nContent-Disposition: form-data; name="{name}"\r\n\r\n{value}\r\n'.encode()
        )
    parts.append(
        f'--{boundary}\r\nContent-Disposition: form-data; name="{file_field}"; '
        f'filename="{filename}"\r\nContent-Type: image/jpeg\r\n\r\n'.encode() + blob + b"\r\n"
    )
    parts.append(f"--{boundary}--\r\n".encode())
    return b"".join(parts), f"multipart/form-data; boundary={boundary}"


def call(base: str, path: str, data=None, content_type=None, user=None):
    request = urllib.request.Request(base + path, data=data)
    if content_type:
        request.add_header("Content-Type", content_type)
    if user:
        request.add_header("X-User-Id", user)
    with urllib.request.urlopen(request, timeout=30) as response:
        return json.loads(response.read())


def wait_healthy(base: str, proc, deadline_s: float = 60.0) -> None:
    start = time.monotonic()
    while time.monotonic() - start < deadline_s:
        if proc.poll() is not None:
            raise RuntimeError(f"service exited early with code {proc.returncode}")
        try:
            call(base, "/healthz")
            return
        except (urllib.error.URLError, ConnectionError):
            time.sleep(0.3)
    raise TimeoutError("service did not become healthy")


def main():
    paths = ensure_artifact()
    port = free_port()
    base = f"http://127.0.0.1:{port}"
    journal = OUTPUT_DIR / "service_ledger.ndjson"
    journal.unlink(missing_ok=True)

    proc = subprocess.Popen(
        [sys.executable, "-m", "wastesort.cli", "serve",
         "--artifact", str(paths["artifact"]),
         "--port", str(port),
         "--journal", str(journal),
         "--feedback-dir", str(OUTPUT_DIR / "feedback")],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    try:
        wait_healthy(base, proc)
        print(f"Service is healthy on {base}")

        image = next(Path(paths["corpus"]).glob("glass/*.jpg")).read_bytes()
        body, ctype = multipart({}, "image", "glass.jpg", image)
        result = call(base, "/api/v1/classify", body, ctype, user="demo-user")
        print(f"\nClassified as {result['label']} "
              f"(confidence {result['confidence']:.3f}), "
              f"+{result['points_awarded']} pts, "
              f"{result['carbon_saved_g']:.0f} g CO2e credited")

        corrected = "metal" if result["label"] != "metal" else "glass"
        body, ctype = multipart(
            {"predicted": result["label"], "corrected": corrected,
             "event_id": result["event_id"]},
            "image", "glass.jpg", image,
        )
        feedback = call(base, "/api/v1/feedback", body, ctype, user="demo-user")
        print(f"Filed correction {feedback['feedback_id']}: "
              f"{result['label']} -> {corrected} (+5 pts)")

        events = [
            {"client_event_id": f"offline-{i}", "type": "classify_confirmed",
             "label": "plastic", "timestamp": "2026-08-17T10:00:00Z"}
            for i in range(3)
        ]
        batch = json.dumps({"user_id": "demo-user", "events": events}).encode()
        first = call(base, "/api/v1/sync", batch, "application/json")
        replay = call(base, "/api/v1/sync", batch, "application/json")
        print(f"\nSync of 3 offline events: applied={first['applied']}")
        print(f"Replay of the same batch:  applied={replay['applied']}, "
              f"duplicates={replay['duplicates']} (totals unchanged: "
              f"{replay['total_points']} pts)")

        board = call(base, "/api/v1/leaderboard?limit=5")
        print("\nLeaderboard:")
        for row in board:
            print(f"  {row['user_id']:<10} {row['total_points']:>3} pts, "
                  f"{row['total_carbon_g']:>7.1f} g")
    finally:
        proc.terminate()
        proc.wait(timeout=10)
    print("\nService stopped.")


if __name__ == "__main__":
    main()
