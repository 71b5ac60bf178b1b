"""Administrative command line.

Commands operate directly on the data directory, not over HTTP, so they
work while the server is down.  Run them against a live server's data
directory only for read-only commands; state written here is picked up
by the server on its next restart.
"""

from __future__ import annotations

import argparse
import getpass
import os
import sys
from pathlib import Path

from ..core import Role
from ..errors import FairhubError
from ..notebooks import tan_manifest_csv
from ..pidreg.client import EndpointConfig
from .portal import Portal


def _data_dir(args) -> Path:
    return Path(args.data_dir or os.environ.get("FAIRHUB_DATA_DIR", "./fairhub-data"))


def _open_portal(args) -> Portal:
    return Portal(_data_dir(args))


def cmd_init(args) -> int:
    portal = Portal(_data_dir(args))
    portal.save()
    portal.close()
    print(f"initialised data directory {_data_dir(args)}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .app import create_app

    listen = args.listen or os.environ.get("FAIRHUB_LISTEN_ADDR", "127.0.0.1:8420")
    host, _, port = listen.rpartition(":")
    if not host or not port.isdigit():
        print(f"bad listen address {listen!r}, expected host:port", file=sys.stderr)
        return 2
    portal = _open_portal(args)
    app = create_app(portal)
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return 0


def cmd_user_create(args) -> int:
    portal = _open_portal(args)
    try:
        password = args.password or getpass.getpass("password: ")
        user = portal.directory.create_user(
            family_name=args.family_name,
            given_name=args.given_name,
            orcid=args.orcid,
            password=password,
        )
        if args.group:
            role = Role(args.role)
            portal.directory.set_membership(user.user_id, args.group, role)
        portal.save()
        print(user.user_id)
        return 0
    finally:
        portal.close()


def cmd_user_deactivate(args) -> int:
    portal = _open_portal(args)
    try:
        portal.directory.deactivate_user(args.user_id)
        portal.save()
        print(f"deactivated {args.user_id}")
        return 0
    finally:
        portal.close()


def cmd_group_create(args) -> int:
    portal = _open_portal(args)
    try:
        group = portal.directory.create_group(args.name, args.description)
        portal.save()
        print(group.group_id)
        return 0
    finally:
        portal.close()


def cmd_membership_set(args) -> int:
    portal = _open_portal(args)
    try:
        portal.directory.set_membership(args.user_id, args.group_id, Role(args.role))
        portal.save()
        print(f"{args.user_id} is now {args.role} in {args.group_id}")
        return 0
    finally:
        portal.close()


def cmd_pid_endpoint_add(args) -> int:
    portal = _open_portal(args)
    try:
        endpoint = {
            "name": args.name,
            "base_url": args.base_url,
            "prefix": args.prefix,
            "username": args.username,
            "password": args.password,
            "embedded": args.embedded,
        }
        if args.default:
            endpoint["default"] = True
        portal.config["pid_endpoints"].append(endpoint)
        portal.pid_registry.router.add(
            EndpointConfig(
                name=args.name,
                base_url=args.base_url,
                prefix=args.prefix,
                username=args.username,
                password=args.password,
                wsgi_app=portal.pid_service if args.embedded else None,
            ),
            default=args.default,
        )
        portal.save_config()
        print(f"registered endpoint {args.name} (prefix {args.prefix})")
        return 0
    finally:
        portal.close()


def cmd_pid_endpoint_list(args) -> int:
    portal = _open_portal(args)
    try:
        for endpoint in portal.pid_registry.router.endpoints():
            kind = "embedded" if endpoint.embedded else endpoint.base_url
            print(f"{endpoint.name}\t{endpoint.prefix}\t{kind}")
        for object_kind, name in sorted(portal.config.get("pid_assignments", {}).items()):
            print(f"assignment\t{object_kind}\t{name}")
        return 0
    finally:
        portal.close()


def cmd_pid_endpoint_assign(args) -> int:
    portal = _open_portal(args)
    try:
        portal.pid_registry.router.assign(args.object_kind, args.endpoint)
        portal.config.setdefault("pid_assignments", {})[args.object_kind] = args.endpoint
        portal.save_config()
        print(f"{args.object_kind} -> {args.endpoint}")
        return 0
    finally:
        portal.close()


def cmd_tan_batch_mint(args) -> int:
    portal = _open_portal(args)
    try:
        pairs = portal.mint_tan_batch(args.count)
        manifest = tan_manifest_csv(pairs)
        if args.out:
            Path(args.out).write_bytes(manifest)
            print(f"wrote {len(pairs)} TAN records to {args.out}")
        else:
            sys.stdout.write(manifest.decode("utf-8"))
        portal.save()
        return 0
    finally:
        portal.close()


def cmd_tier_migrate(args) -> int:
    portal = _open_portal(args)
    try:
        report = portal.store.migrate_tiers(
            hot_capacity_bytes=args.hot_capacity_bytes,
            min_candidate_size_bytes=args.min_candidate_size_bytes,
        )
        print(
            f"moved {len(report.moved)} files; hot tier "
            f"{report.hot_bytes_before} -> {report.hot_bytes_after} bytes"
            + (" (still over capacity)" if report.residual_overflow else "")
        )
        return 0
    finally:
        portal.close()


def cmd_fixture_record(args) -> int:
    portal = Portal(_data_dir(args), upstream_mode="record", fixture_dir=args.fixture_dir)
    try:
        if args.pmid:
            article = portal.importer.import_by_pmid(args.pmid)
        else:
            article = portal.importer.import_by_doi(args.doi)
        portal.save()
        print(f"recorded fixture and imported {article.article_id}: {article.title}")
        return 0
    finally:
        portal.close()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairhub", description="research data portal administration"
    )
    parser.add_argument(
        "--data-dir",
        default=None,
        help="data directory (default: $FAIRHUB_DATA_DIR or ./fairhub-data)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create the data directory and default config")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("serve", help="run the HTTP gateway")
    p.add_argument("--listen", default=None, help="host:port (default: $FAIRHUB_LISTEN_ADDR)")
    p.set_defaults(func=cmd_serve)

    user = sub.add_parser("user", help="manage accounts").add_subparsers(
        dest="subcommand", required=True
    )
    p = user.add_parser("create")
    p.add_argument("family_name")
    p.add_argument("given_name")
    p.add_argument("orcid")
    p.add_argument("--password", default=None, help="prompt if omitted")
    p.add_argument("--group", default=None, help="add a membership on creation")
    p.add_argument("--role", default=Role.MEMBER.value, choices=[r.value for r in Role])
    p.set_defaults(func=cmd_user_create)
    p = user.add_parser("deactivate")
    p.add_argument("user_id")
    p.set_defaults(func=cmd_user_deactivate)

    group = sub.add_parser("group", help="manage research groups").add_subparsers(
        dest="subcommand", required=True
    )
    p = group.add_parser("create")
    p.add_argument("name")
    p.add_argument("--description", default="")
    p.set_defaults(func=cmd_group_create)

    membership = sub.add_parser("membership", help="group roles").add_subparsers(
        dest="subcommand", required=True
    )
    p = membership.add_parser("set")
    p.add_argument("user_id")
    p.add_argument("group_id")
    p.add_argument("role", choices=[r.value for r in Role])
    p.set_defaults(func=cmd_membership_set)

    endpoint = sub.add_parser("pid-endpoint", help="handle service endpoints").add_subparsers(
        dest="subcommand", required=True
    )
    p = endpoint.add_parser("add")
    p.add_argument("name")
    p.add_argument("prefix")
    p.add_argument("--base-url", default="https://pid.invalid")
    p.add_argument("--username", default=None)
    p.add_argument("--password", default=None)
    p.add_argument("--embedded", action="store_true", help="serve from the built-in mock")
    p.add_argument("--default", action="store_true")
    p.set_defaults(func=cmd_pid_endpoint_add)
    p = endpoint.add_parser("list")
    p.set_defaults(func=cmd_pid_endpoint_list)
    p = endpoint.add_parser("assign")
    p.add_argument("object_kind")
    p.add_argument("endpoint")
    p.set_defaults(func=cmd_pid_endpoint_assign)

    batch = sub.add_parser("tan-batch", help="notebook TAN batches").add_subparsers(
        dest="subcommand", required=True
    )
    p = batch.add_parser("mint")
    p.add_argument("count", type=int)
    p.add_argument("--out", default=None, help="write the pid,tan manifest here")
    p.set_defaults(func=cmd_tan_batch_mint)

    tier = sub.add_parser("tier-migrate", help="hot/cold storage rebalancing").add_subparsers(
        dest="subcommand", required=True
    )
    p = tier.add_parser("run")
    p.add_argument("hot_capacity_bytes", type=int)
    p.add_argument("--min-candidate-size-bytes", type=int, default=0)
    p.set_defaults(func=cmd_tier_migrate)

    fixture = sub.add_parser("fixture", help="upstream response fixtures").add_subparsers(
        dest="subcommand", required=True
    )
    p = fixture.add_parser("record", help="fetch live and store the fixture")
    p.add_argument("--pmid", default=None)
    p.add_argument("--doi", default=None)
    p.add_argument("--fixture-dir", default=None)
    p.set_defaults(func=cmd_fixture_record)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "func", None) is cmd_fixture_record and not (args.pmid or args.doi):
        parser.error("fixture record needs --pmid or --doi")
    try:
        return args.func(args)
    except FairhubError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
