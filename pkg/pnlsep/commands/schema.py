"""
Schema command: export the JSON Schema of every emitted document.
"""

import click
import orjson

from pnlsep.commands import fail
from pnlsep.exceptions import PnlError, StorageError
from pnlsep.models.schemas import EMITTED_DOCUMENTS
from pnlsep.services.storage import ensure_directory


@click.command("schema", short_help="Write JSON Schemas for the emitted documents")
@click.option("--out-dir", default="schemas", show_default=True, help="Directory receiving <name>.schema.json files")
def schema(out_dir):
    """Write one <name>.schema.json per emitted JSON document."""
    try:
        directory = ensure_directory(out_dir)
        for name, model in EMITTED_DOCUMENTS.items():
            path = directory / f"{name}.schema.json"
            payload = orjson.dumps(
                model.model_json_schema(),
                option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_APPEND_NEWLINE,
            )
            try:
                path.write_bytes(payload)
            except OSError as e:
                raise StorageError(f"cannot write {path}: {e.strerror}", path=path)
    except PnlError as e:
        fail(e)

    click.echo(f"wrote {len(EMITTED_DOCUMENTS)} schemas to {directory}")
