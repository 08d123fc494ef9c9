"""In-process HTTP stub speaking the embedding wire protocol."""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class MockEmbedServer:
    """Serves POST {"texts": [...]} -> {"vectors": [...], "dim": D}.

    `fn` maps one text to one vector (a plain list). `truncate` drops that
    many vectors from each response to simulate a broken service.
    """

    def __init__(self, fn, dim, truncate=0):
        self.fn = fn
        self.dim = dim
        self.calls = 0
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                outer.calls += 1
                n = int(self.headers.get("Content-Length", 0))
                payload = json.loads(self.rfile.read(n))
                vectors = [outer.fn(t) for t in payload["texts"]]
                if truncate:
                    vectors = vectors[: len(vectors) - truncate]
                body = json.dumps({"vectors": vectors, "dim": outer.dim}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    def __enter__(self):
        self.thread.start()
        host, port = self.server.server_address
        self.endpoint = f"http://{host}:{port}/embed"
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
        return False
