#!/usr/bin/env python3
"""Test-double scorer speaking the line-delimited JSON protocol.

Modes (first CLI arg):
  echo      -- every text scores -1.0
  length    -- score is -len(text)
  reversed  -- like length, but responses for each batch are buffered and
               emitted in reverse arrival order
  nan       -- returns NaN for every request
"""
import json
import sys

mode = sys.argv[1] if len(sys.argv) > 1 else "echo"


def score(text):
    if mode == "echo":
        return -1.0
    if mode == "nan":
        # JSON has no NaN literal; a null loglik is the non-finite case.
        return None
    return -float(len(text))


pending = []
for line in sys.stdin:
    msg = json.loads(line)
    kind = msg.get("type")
    if kind == "hello":
        print(json.dumps({"type": "ready"}), flush=True)
    elif kind == "score":
        resp = {"type": "result", "id": msg["id"], "loglik": score(msg["text"])}
        if mode == "reversed":
            pending.append(resp)
            if len(pending) >= 3:
                for r in reversed(pending):
                    print(json.dumps(r), flush=True)
                pending = []
        else:
            print(json.dumps(resp), flush=True)
    elif kind == "bye":
        for r in reversed(pending):
            print(json.dumps(r), flush=True)
        break
