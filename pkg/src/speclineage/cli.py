"""Pipeline CLI: composable stages over a workspace directory.

Stages read the previous stage's artifacts from the workspace and write their
own plus an updated manifest. The pipeline is file-based because adjudication
inserts a human-duration pause between `candidates` and `equivalence`.

Exit codes: 0 ok, 1 usage, 2 validation, 3 provider, 4 I/O.
"""

from __future__ import annotations

import json
import logging
import re
import sys
from pathlib import Path

import click

from . import __version__
from . import workspace as ws
from .adjudication import (EquivalenceClasses, Verdict, VerdictLog,
                           build_equivalence, utc_now)
from .characterize import (group_spec_table, load_categories_csv,
                           load_groups_csv, tables_to_csv, tables_to_markdown)
from .clustering import agglomerate, distance_matrix, spec_filter
from .corpus import corpus_from_dict, corpus_to_dict, load_corpus, validate
from .errors import (ProviderError, SpecLineageError, WorkspaceLockedError)
from .matrix import (build_incidence, commonality, commonality_from_class_sets,
                     export_commonality_csv, export_incidence_csv)
from .normalize import dedup_exact, dump_exact_classes, load_exact_classes
from .render import render_dendrogram, render_genealogy, render_profile
from .review_server import serve
from .similarity import (BackendConfig, CandidateSet, EmbeddingClient,
                         top_k_candidates)
from .workspace import Workspace, canonical_json

logger = logging.getLogger(__name__)

AUTO_EPOCH = "1970-01-01T00:00:00+00:00"

BACKEND_FLAGS = {"char-ngram": "char_ngram", "levenshtein": "levenshtein",
                 "external": "external_embedding"}
METRIC_FLAGS = {"jaccard": "jaccard", "dice": "dice",
                "euclidean-binary": "euclidean_binary"}
POLICY_FLAGS = {"any-similar": "any_similar", "all-similar": "all_similar"}

workspace_option = click.option(
    "--workspace", "-w", "workspace_dir", default="workspace",
    show_default=True, help="Workspace directory shared by all stages.")


@click.group()
@click.version_option(version=__version__)
def cli():
    """Corpus genealogy pipeline."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")


def _load_corpus(work: Workspace):
    return corpus_from_dict(json.loads(
        work.require(ws.CORPUS).read_text(encoding="utf-8")))


def _load_equivalence(work: Workspace) -> EquivalenceClasses:
    return EquivalenceClasses.from_dict(json.loads(
        work.require(ws.EQUIVALENCE).read_text(encoding="utf-8")))


def _run_stage(work: Workspace, stage: str, params: dict,
               input_names: list[str], body) -> None:
    """Lock, hash inputs, run, record the stage in the manifest."""
    with work.lock():
        started = utc_now()
        inputs = work.hash_inputs(input_names)
        outputs = body()
        work.record_stage(stage, params, inputs, outputs, started)


@cli.command()
@workspace_option
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default="csv",
              show_default=True)
def ingest(workspace_dir, input_path, fmt):
    """Load and validate a corpus file into the workspace."""
    work = Workspace(workspace_dir)

    def body():
        corpus = load_corpus(input_path, fmt)
        report = validate(corpus)
        for line in report.lines():
            click.echo(f"warning: {line}", err=True)
        work.path(ws.CORPUS).write_text(canonical_json(corpus_to_dict(corpus)),
                                        encoding="utf-8")
        click.echo(f"ingested {len(corpus.items)} items, {len(corpus.records)} records")
        return [ws.CORPUS]

    _run_stage(work, "ingest", {"format": fmt, "source": str(input_path)},
               [str(Path(input_path).resolve())], body)


@cli.command()
@workspace_option
def dedup(workspace_dir):
    """Collapse exact duplicate sentences into preliminary classes."""
    work = Workspace(workspace_dir)

    def body():
        corpus = _load_corpus(work)
        classes = dedup_exact(corpus)
        dump_exact_classes(classes, work.path(ws.CLASSES))
        click.echo(f"{classes.record_count()} records -> {len(classes)} exact classes")
        return [ws.CLASSES]

    _run_stage(work, "dedup", {}, [ws.CORPUS], body)


@cli.command()
@workspace_option
@click.option("--k", default=3, show_default=True,
              help="Neighbors per class queued for review.")
@click.option("--backend", type=click.Choice(sorted(BACKEND_FLAGS)),
              default="char-ngram", show_default=True)
@click.option("--endpoint", default=None, help="Embedding provider base URL.")
@click.option("--n", "ngram", default=3, show_default=True,
              help="Character n-gram size (char-ngram backend).")
def candidates(workspace_dir, k, backend, endpoint, ngram):
    """Emit top-k similarity candidate pairs for human review."""
    kind = BACKEND_FLAGS[backend]
    if kind == "external_embedding" and not endpoint:
        raise click.UsageError("--endpoint is required with --backend external")
    work = Workspace(workspace_dir)
    config = BackendConfig(kind=kind, n=ngram,
                           endpoint=endpoint if kind == "external_embedding" else None)

    def body():
        classes = load_exact_classes(work.require(ws.CLASSES))
        client = None
        if kind == "external_embedding":
            client = EmbeddingClient(endpoint, cache_path=work.path(ws.EMBED_CACHE))
        cand = top_k_candidates(classes, config, k, client=client)
        cand.dump_jsonl(work.path(ws.CANDIDATES))
        click.echo(f"{len(cand)} candidate pairs "
                   f"({len(cand.pair_keys())} distinct) at k={k}")
        return [ws.CANDIDATES]

    _run_stage(work, "candidates", {"k": k, "backend": config.to_dict()},
               [ws.CLASSES], body)


@cli.command("verdicts-import")
@workspace_option
@click.argument("verdict_file", required=False,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--auto-accept", is_flag=True,
              help="Stub: mark every candidate pair similar (annotator 'auto').")
def verdicts_import(workspace_dir, verdict_file, auto_accept):
    """Load a verdict JSONL file (or generate an auto-accept stub)."""
    if not verdict_file and not auto_accept:
        raise click.UsageError("give a verdict file or --auto-accept")
    work = Workspace(workspace_dir)

    def body():
        cand = CandidateSet.load_jsonl(work.require(ws.CANDIDATES))
        valid = cand.key_set()
        log = VerdictLog(valid_keys=valid)
        if auto_accept:
            for key in cand.pair_keys():
                log.append(Verdict(pair_key=key, decision="similar",
                                   annotator_id="auto", timestamp=AUTO_EPOCH))
        else:
            log = VerdictLog.from_jsonl(verdict_file, valid_keys=valid)
        log.to_jsonl(work.path(ws.VERDICTS))
        click.echo(f"{len(log.entries)} verdicts loaded")
        return [ws.VERDICTS]

    params = {"auto_accept": auto_accept, "source": verdict_file or ""}
    inputs = [ws.CANDIDATES] + ([str(Path(verdict_file).resolve())] if verdict_file else [])
    _run_stage(work, "verdicts-import", params, inputs, body)


@cli.command("serve-review")
@workspace_option
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
@click.option("--ui-dir", default=None, type=click.Path(file_okay=False),
              help="Static directory with the built review UI.")
def serve_review(workspace_dir, host, port, ui_dir):
    """Run the single-writer review API (and UI, when --ui-dir is given)."""
    work = Workspace(workspace_dir)
    with work.lock():
        click.echo(f"review api on http://{host}:{port}/")
        serve(work, host=host, port=port, ui_dir=ui_dir)


@cli.command()
@workspace_option
@click.option("--policy", type=click.Choice(sorted(POLICY_FLAGS)),
              default="any-similar", show_default=True)
def equivalence(workspace_dir, policy):
    """Merge exact classes along adjudicated similarity edges."""
    work = Workspace(workspace_dir)
    policy_name = POLICY_FLAGS[policy]

    def body():
        classes = load_exact_classes(work.require(ws.CLASSES))
        inputs = [ws.CLASSES]
        if work.path(ws.VERDICTS).exists():
            cand = CandidateSet.load_jsonl(work.require(ws.CANDIDATES))
            log = VerdictLog.from_jsonl(work.path(ws.VERDICTS),
                                        valid_keys=cand.key_set())
        else:
            log = VerdictLog(valid_keys=set())
        eq = build_equivalence(classes, log, policy_name)
        ws.write_json(work.path(ws.EQUIVALENCE), eq.to_dict())
        click.echo(f"{len(classes)} exact classes -> {eq.class_count()} final classes")
        return [ws.EQUIVALENCE]

    input_names = [ws.CLASSES]
    if Workspace(workspace_dir).path(ws.VERDICTS).exists():
        input_names += [ws.CANDIDATES, ws.VERDICTS]
    _run_stage(work, "equivalence", {"policy": policy_name}, input_names, body)


@cli.command()
@workspace_option
def matrix(workspace_dir):
    """Build the incidence matrix and the commonality matrix."""
    work = Workspace(workspace_dir)

    def body():
        corpus = _load_corpus(work)
        eq = _load_equivalence(work)
        inc = build_incidence(corpus, eq)
        cm = commonality(inc)
        check = commonality_from_class_sets(corpus, eq)
        if cm.counts != check.counts:
            raise SpecLineageError("incidence and class-set commonality disagree")
        export_incidence_csv(inc, work.path(ws.INCIDENCE))
        export_commonality_csv(cm, work.path(ws.COMMONALITY))
        click.echo(f"incidence: {len(inc.rows)} rows x {2 + len(inc.items)} columns")
        return [ws.INCIDENCE, ws.COMMONALITY]

    _run_stage(work, "matrix", {}, [ws.CORPUS, ws.EQUIVALENCE], body)


def _dendrogram_names(axis: str, linkage: str) -> tuple[str, str, str]:
    base = f"dendrogram_{axis}_{linkage}"
    return f"{base}.json", f"{base}.newick", f"{base}.svg"


@cli.command()
@workspace_option
@click.option("--axis", type=click.Choice(["items", "specs"]), default="items",
              show_default=True)
@click.option("--linkage", type=click.Choice(["complete", "ward"]),
              default="complete", show_default=True)
@click.option("--metric", type=click.Choice(sorted(METRIC_FLAGS)), default=None,
              help="Default: jaccard for complete, euclidean-binary for ward.")
@click.option("--min-items", default=1, show_default=True,
              help="Specs axis: keep classes present in at least this many items.")
def cluster(workspace_dir, axis, linkage, metric, min_items):
    """Agglomerative clustering of items or of frequent spec classes."""
    work = Workspace(workspace_dir)
    metric_name = (METRIC_FLAGS[metric] if metric
                   else ("euclidean_binary" if linkage == "ward" else "jaccard"))

    def body():
        corpus = _load_corpus(work)
        eq = _load_equivalence(work)
        inc = build_incidence(corpus, eq)
        class_ids = spec_filter(inc, min_items) if axis == "specs" else None
        dist = distance_matrix(inc, axis, metric_name, class_ids=class_ids)
        dend = agglomerate(dist, linkage)
        json_name, newick_name, svg_name = _dendrogram_names(axis, linkage)
        data = dend.to_dict()
        data["provenance"] = work.stage_token(
            stage_name, params, work.hash_inputs([ws.CORPUS, ws.EQUIVALENCE]))
        ws.write_json(work.path(json_name), data)
        work.path(newick_name).write_text(dend.to_newick() + "\n", encoding="utf-8")
        work.path(svg_name).write_text(render_dendrogram(dend), encoding="utf-8")
        click.echo(f"{len(dend.leaves)} leaves, {len(dend.merges)} merges "
                   f"({axis}, {linkage}, {metric_name})")
        return [json_name, newick_name, svg_name]

    params = {"axis": axis, "linkage": linkage, "metric": metric_name,
              "min_items": min_items}
    stage_name = f"cluster-{axis}-{linkage}"
    _run_stage(work, stage_name, params, [ws.CORPUS, ws.EQUIVALENCE], body)


@cli.command()
@workspace_option
@click.option("--groups", "groups_file", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="CSV item_id,group.")
@click.option("--threshold", default=0.3, show_default=True,
              help="Support fraction in (0, 1].")
@click.option("--categories", "categories_file", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Optional CSV class_id,category.")
def characterize(workspace_dir, groups_file, threshold, categories_file):
    """Per-group frequent-spec tables at a support threshold."""
    work = Workspace(workspace_dir)

    def body():
        corpus = _load_corpus(work)
        eq = _load_equivalence(work)
        inc = build_incidence(corpus, eq)
        groups = load_groups_csv(groups_file)
        categories = load_categories_csv(categories_file) if categories_file else None
        tables = group_spec_table(groups, inc, threshold, categories=categories)
        work.path(ws.TABLES_MD).write_text(tables_to_markdown(tables),
                                           encoding="utf-8")
        tables_to_csv(tables, work.path(ws.TABLES_CSV))
        click.echo(f"{len(tables)} group tables at threshold {threshold}")
        return [ws.TABLES_MD, ws.TABLES_CSV]

    inputs = [ws.CORPUS, ws.EQUIVALENCE, str(Path(groups_file).resolve())]
    if categories_file:
        inputs.append(str(Path(categories_file).resolve()))
    _run_stage(work, "characterize",
               {"threshold": threshold, "groups": str(groups_file),
                "categories": str(categories_file or "")}, inputs, body)


def _safe_name(item_id: str) -> str:
    return re.sub(r"[^\w.-]+", "_", item_id)


@cli.command()
@workspace_option
@click.option("--min-edge", default=1, show_default=True,
              help="Hide ribbons thinner than this commonality count.")
@click.option("--node-weight", type=click.Choice(["sum", "max"]), default="sum",
              show_default=True)
@click.option("--item", "only_item", default=None,
              help="Render the shared-spec profile of one item only.")
def render(workspace_dir, min_edge, node_weight, only_item):
    """Emit the genealogy ribbon chart and per-item shared-spec profiles."""
    work = Workspace(workspace_dir)

    def body():
        corpus = _load_corpus(work)
        eq = _load_equivalence(work)
        cm = commonality(build_incidence(corpus, eq))
        svg, layout = render_genealogy(cm, min_edge=min_edge,
                                       node_weight=node_weight)
        work.path(ws.GENEALOGY_SVG).write_text(svg, encoding="utf-8")
        ws.write_json(work.path(ws.GENEALOGY_JSON), layout)
        outputs = [ws.GENEALOGY_SVG, ws.GENEALOGY_JSON]
        targets = [only_item] if only_item else [it.item_id for it in cm.items]
        for item_id in targets:
            p_svg, p_layout = render_profile(item_id, cm)
            svg_name = f"profile_{_safe_name(item_id)}.svg"
            json_name = f"profile_{_safe_name(item_id)}.json"
            work.path(svg_name).write_text(p_svg, encoding="utf-8")
            ws.write_json(work.path(json_name), p_layout)
            outputs += [svg_name, json_name]
        click.echo(f"genealogy with {len(layout['ribbons'])} ribbons, "
                   f"{len(targets)} profiles")
        return outputs

    _run_stage(work, "render", {"min_edge": min_edge, "node_weight": node_weight,
                                "item": only_item or ""},
               [ws.CORPUS, ws.EQUIVALENCE], body)


@cli.command()
@workspace_option
def report(workspace_dir):
    """Verify artifact hashes and bundle tables and figures into report.md."""
    work = Workspace(workspace_dir)

    def body():
        mismatches = work.verify_outputs()
        if mismatches:
            raise SpecLineageError(
                "manifest hash mismatch:\n  " + "\n  ".join(mismatches))
        corpus = _load_corpus(work)
        eq = _load_equivalence(work)
        inc = build_incidence(corpus, eq)
        cm = commonality(inc)
        manifest = work.manifest()
        lines = ["# Corpus genealogy report", ""]
        lines.append(f"pipeline: `{work.pipeline_id()}`")
        lines.append("")
        lines.append("## Corpus")
        lines.append(f"- items: {len(corpus.items)}")
        lines.append(f"- spec records: {len(corpus.records)}")
        lines.append(f"- final equivalence classes: {eq.class_count()}")
        lines.append("")
        lines.append("## Commonality")
        peak = max((cm.counts[i][j] for i in range(len(cm.items))
                    for j in range(i + 1, len(cm.items))), default=0)
        lines.append(f"- largest pairwise shared-class count: {peak}")
        lines.append("")
        lines.append("## Stages")
        for stage in sorted(manifest.get("stages", {})):
            if stage == "report":
                continue
            entry = manifest["stages"][stage]
            lines.append(f"- `{stage}` params: "
                         f"`{json.dumps(entry['params'], sort_keys=True)}`")
        lines.append("")
        if work.path(ws.TABLES_MD).exists():
            lines.append("## Characteristic specs")
            lines.append(work.path(ws.TABLES_MD).read_text(encoding="utf-8"))
        figures = sorted(p.name for p in work.root.glob("*.svg"))
        if figures:
            lines.append("## Figures")
            for name in figures:
                lines.append(f"- {name}")
            lines.append("")
        work.path(ws.REPORT).write_text("\n".join(lines), encoding="utf-8")
        click.echo(f"report written to {work.path(ws.REPORT)}")
        return [ws.REPORT]

    _run_stage(work, "report", {}, [ws.CORPUS, ws.EQUIVALENCE], body)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except ProviderError as exc:
        click.echo(f"provider error: {exc}", err=True)
        return 3
    except WorkspaceLockedError as exc:
        click.echo(f"error: {exc}", err=True)
        return 4
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return 4
    except (SpecLineageError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
