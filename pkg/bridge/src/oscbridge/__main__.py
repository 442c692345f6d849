"""Entry point: ``python -m oscbridge ENV_ID [--tcp PORT]``."""

import argparse
import sys

from .server import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="oscbridge")
    parser.add_argument("env_id", help="task id in the external suite, or 'stub:echo'")
    parser.add_argument("--tcp", type=int, default=None, help="serve one TCP session instead of stdio")
    args = parser.parse_args(argv)
    return serve(args.env_id, tcp_port=args.tcp)


if __name__ == "__main__":
    sys.exit(main())
