"""Stdio worker protocol: strict line discipline, survives bad input."""

import io
import json
import subprocess
import sys

import pytest

from vulnformer.serve import serve_stdio


def run_lines(model_dir: str, lines: list[str]) -> list[dict]:
    stdin = io.StringIO("".join(line + "\n" for line in lines))
    stdout = io.StringIO()
    status = serve_stdio(model_dir, stdin=stdin, stdout=stdout)
    assert status == 0
    return [json.loads(line) for line in stdout.getvalue().splitlines()]


@pytest.fixture(scope="module")
def model_dir(finetuned):
    return finetuned["bundle_dir"] + "/model"


class TestProtocol:
    def test_answers_four_logits_per_request(self, model_dir):
        answers = run_lines(model_dir, [
            json.dumps({"text": "remote code execution"}),
            json.dumps({"text": "typo in help text"}),
        ])
        assert len(answers) == 2
        for answer in answers:
            assert list(answer) == ["logits"]
            assert len(answer["logits"]) == 4
            assert all(isinstance(x, float) for x in answer["logits"])

    def test_malformed_json_yields_error_line_and_continues(self, model_dir):
        answers = run_lines(model_dir, [
            "{not json",
            json.dumps({"text": "still alive"}),
        ])
        assert "error" in answers[0]
        assert "logits" in answers[1]

    def test_missing_text_key(self, model_dir):
        (answer,) = run_lines(model_dir, [json.dumps({"body": "x"})])
        assert "error" in answer

    def test_non_string_text(self, model_dir):
        (answer,) = run_lines(model_dir, [json.dumps({"text": 5})])
        assert "error" in answer and "string" in answer["error"]

    def test_blank_lines_ignored(self, model_dir):
        answers = run_lines(model_dir, ["", "  ", json.dumps({"text": "x"})])
        assert len(answers) == 1

    def test_eof_is_clean_exit(self, model_dir):
        assert run_lines(model_dir, []) == []

    def test_identical_requests_get_identical_answers(self, model_dir):
        line = json.dumps({"text": "sql injection in the search endpoint"})
        a, b = run_lines(model_dir, [line, line])
        assert a == b


def test_subprocess_contract(finetuned):
    """The real process: spawn, converse, close stdin, observe exit 0."""
    spec = json.load(open(finetuned["spec_path"]))
    proc = subprocess.Popen(
        spec["argv"],
        cwd=finetuned["bundle_dir"],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        text=True,
    )
    try:
        proc.stdin.write(json.dumps({"text": "heap buffer overflow in the parser"}) + "\n")
        proc.stdin.flush()
        answer = json.loads(proc.stdout.readline())
        assert len(answer["logits"]) == 4
        proc.stdin.close()
        assert proc.wait(timeout=30) == 0
    finally:
        if proc.poll() is None:
            proc.kill()
            proc.wait()


def test_cli_usage_error():
    result = subprocess.run(
        [sys.executable, "-m", "vulnformer.serve"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 2
    assert "usage" in result.stderr
