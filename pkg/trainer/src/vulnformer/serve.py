"""Stdio inference worker speaking the gateway's line protocol.

Reads one JSON object {"text": ...} per line and answers one line
{"logits": [low, medium, high, critical]}. A malformed request gets an
{"error": ...} line and the worker keeps running; end of input ends the
process with status 0. Requests are handled strictly one at a time.
"""

from __future__ import annotations

import json
import sys

import torch

from .finetune import predict_logits
from .modeling import load_pretrained


def serve_stdio(model_dir: str, stdin=None, stdout=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    torch.set_num_threads(1)
    tokenizer, model = load_pretrained(model_dir)
    model.eval()
    max_length = int(tokenizer.model_max_length)

    for line in stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
            text = request["text"]
            if not isinstance(text, str):
                raise TypeError(f"text must be a string, got {type(text).__name__}")
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            stdout.write(json.dumps({"error": f"bad request: {e}"}) + "\n")
            stdout.flush()
            continue
        logits = predict_logits(model, tokenizer, [text], max_length)[0]
        stdout.write(json.dumps({"logits": [float(x) for x in logits]}) + "\n")
        stdout.flush()
    return 0


def main() -> int:
    if len(sys.argv) != 2:
        print("usage: python3 -m vulnformer.serve MODEL_DIR", file=sys.stderr)
        return 2
    return serve_stdio(sys.argv[1])


if __name__ == "__main__":
    sys.exit(main())
