#!/usr/bin/env python3
"""Serve the platform HTTP API with a small demo cohort.

Registers three demo users (tokens printed at startup), then exposes the /v1
API on --host/--port.  Drive days forward with POST /v1/admin/tick using the
admin token.
"""

import argparse

import uvicorn

from isatrain.api import create_app
from isatrain.challenges import load_templates
from isatrain.config import load_experiment_config
from isatrain.gamification import load_catalog
from isatrain.service import PlatformService
from isatrain.taxonomy import load_registry


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--config", default=None, help="experiment/platform TOML")
    parser.add_argument("--admin-token", default="admin")
    parser.add_argument("--log", default="platform-events.ndjson")
    parser.add_argument("--users", type=int, default=3)
    args = parser.parse_args()

    config = load_experiment_config(args.config)
    service = PlatformService(load_registry(), load_templates(), load_catalog(),
                              config.platform, log_path=args.log)
    for i in range(args.users):
        account = service.register_user(f"demo{i:02d}")
        print(f"user {account.user_id}  group={account.group.value}  "
              f"token={account.token}")
    print(f"admin token: {args.admin_token}")
    uvicorn.run(create_app(service, admin_token=args.admin_token),
                host=args.host, port=args.port)


if __name__ == "__main__":
    main()
