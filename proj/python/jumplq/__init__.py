"""Python front end for the jump-diffusion LQ control library."""

import json

from ._core import JumpLqError, run_json

__all__ = ["JumpLqError", "run", "run_json"]


def run(command, config):
    """Run one subcommand on a config dict.

    Returns (exit_code, payload, files): the report payload as a dict and
    the would-be output files as {name: content}. Nothing touches the
    filesystem.
    """
    env = json.loads(run_json(command, json.dumps(config)))
    return env["exit_code"], env["payload"], env.get("files", {})
