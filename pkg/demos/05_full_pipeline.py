"""
The full pipeline against local stub endpoints
==============================================

Runs both pipeline modes end to end: FT_EXPORT turns a repository into
training JSONL, then RAG_EVAL holds one file out, indexes the rest,
prompts a stub generation endpoint with retrieval-augmented queries, and
scores the answers. The stubs run in-process on a random port, so the
whole demo is offline and deterministic.
"""

import json
import tempfile
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from scopekit.config import PipelineConfig
from scopekit.pipeline import Mode, run_pipeline

# ---------------------------------------------------------------- stubs --
# /embed returns a vector derived from text length and byte sum: useless
# semantically, perfectly deterministic. /generate answers by longest
# matching prompt suffix, the way a real completion model is driven here.
DIM = 16
ANSWERS: dict[str, str] = {}


class _StubHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        if self.path.endswith("/embed"):
            vectors = []
            for text in body["texts"]:
                vec = [((len(text) + i) % 7) - 3.0 for i in range(DIM)]
                vec[sum(text.encode()) % DIM] += 1.0
                vectors.append(vec)
            payload = {"vectors": vectors, "dim": DIM}
        else:
            prompt = body["prompt"]
            text = next(
                (ans for suffix, ans in ANSWERS.items() if prompt.endswith(suffix)),
                "// stub had no answer\n}",
            )
            payload = {"text": text, "stop_reason": "end_of_stream"}
        data = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
threading.Thread(target=server.serve_forever, daemon=True).start()
base_url = f"http://127.0.0.1:{server.server_address[1]}"
print(f"stub endpoints listening at {base_url}")

# ----------------------------------------------------------- the corpus --
PAD = "/* shared scaffolding so prefixes clear the minimum */\n" * 5
JUNK = "\n// trailing chatter"

repo = {}
for i in range(3):
    lines = "\n".join(f"    acc_{i} += {j} * step;" for j in range(4))
    repo[f"src/train_{i}.c"] = f"{PAD}int train_{i}(int step) {{\n{lines}\n    return acc_{i};\n}}\n"

held_lines = "\n".join(f"    held += {j} * step;" for j in range(4))
held_text = f"{PAD}int held_fn(int step) {{\n{held_lines}\n    return held;\n}}\n"
repo["src/held.c"] = held_text

# The stub model "knows" the held function: it answers with the exact body
# plus some chatter, which is what the two metrics are built to tell apart.
signature = "int held_fn(int step) {"
start = held_text.index(signature) + len(signature)
truth = held_text[start : held_text.index("}", start) + 1]
ANSWERS[signature] = truth + JUNK

with tempfile.TemporaryDirectory() as workdir:
    root = Path(workdir) / "repo"
    for rel, text in repo.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")

    # -------------------------------------------------------- FT_EXPORT --
    export_cfg = PipelineConfig(
        repo_root=root,
        output_dir=Path(workdir) / "export",
        random_starts=1,
        seed=3,
    )
    result = run_pipeline(export_cfg, Mode.FT_EXPORT)
    card = json.loads((result.out_dir / "dataset_card.json").read_text())
    print(f"\nFT_EXPORT artifacts in {result.out_dir.name}/:")
    for stage in result.stages:
        print(f"  stage {stage.stage}: {stage.status}")
    print(f"dataset card: {card['total_pairs']} pairs, by category {card['by_category']}")

    # --------------------------------------------------------- RAG_EVAL --
    eval_cfg = PipelineConfig(
        repo_root=root,
        output_dir=Path(workdir) / "rag_eval",
        holdout_paths=("src/held.c",),
        embedder=f"remote:{base_url}",
        embedding_dimension=DIM,
        generate_endpoint=f"{base_url}/generate",
    )
    result = run_pipeline(eval_cfg, Mode.RAG_EVAL)
    print(f"\nRAG_EVAL artifacts in {result.out_dir.name}/:")
    for stage in result.stages:
        print(f"  stage {stage.stage}: {stage.status}")

    records = [
        json.loads(line)
        for line in (result.out_dir / "eval_records.jsonl").read_text().splitlines()
    ]
    for r in records:
        print(f"\nheld scope {r['test_id'][:12]}... ({r['category']}):")
        print(f"  full distance = {r['full_distance']} (the {len(JUNK)}-byte chatter tail)")
        print(f"  opt distance  = {r['opt_distance']} (truth appeared verbatim)")
    print("\nreport.csv:")
    print((result.out_dir / "report.csv").read_text())

server.shutdown()
