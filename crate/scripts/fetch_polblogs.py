#!/usr/bin/env python3
"""Fetch the political-blogs hyperlink network and write its largest
connected component to data/polblogs_lcc.txt as an undirected simple
edge list (`u v` per line, zero-based ids).

Processing: edge directions are dropped, self-loops removed, duplicate
edges merged. The resulting component has 1222 nodes and 16714 edges.

Usage: python3 scripts/fetch_polblogs.py [output-path]
"""

import io
import re
import sys
import urllib.request
import zipfile
from collections import deque
from pathlib import Path

SOURCES = [
    # Mark Newman's network-data collection (GML inside a zip).
    "https://websites.umich.edu/~mejn/netdata/polblogs.zip",
    "http://www-personal.umich.edu/~mejn/netdata/polblogs.zip",
    # Netzschleuder mirror (CSV inside a zip).
    "https://networks.skewed.de/net/polblogs/files/polblogs.csv.zip",
]


def download(url: str) -> bytes:
    request = urllib.request.Request(url, headers={"User-Agent": "Mozilla/5.0"})
    with urllib.request.urlopen(request, timeout=60) as response:
        return response.read()


def parse_gml_edges(text: str) -> list[tuple[int, int]]:
    """Minimal GML edge extraction: `source N ... target M` pairs."""
    edges = []
    for block in re.findall(r"edge\s*\[(.*?)\]", text, flags=re.S):
        source = re.search(r"source\s+(\d+)", block)
        target = re.search(r"target\s+(\d+)", block)
        if source and target:
            edges.append((int(source.group(1)), int(target.group(1))))
    if not edges:
        raise ValueError("no edges found in GML input")
    return edges


def parse_csv_edges(text: str) -> list[tuple[int, int]]:
    edges = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = re.split(r"[,\s]+", line)
        if len(parts) >= 2:
            edges.append((int(parts[0]), int(parts[1])))
    if not edges:
        raise ValueError("no edges found in CSV input")
    return edges


def extract_edges(payload: bytes) -> list[tuple[int, int]]:
    with zipfile.ZipFile(io.BytesIO(payload)) as archive:
        names = archive.namelist()
        for name in names:
            if name.endswith(".gml"):
                return parse_gml_edges(archive.read(name).decode("latin-1"))
        for name in names:
            if name.endswith("edges.csv") or name.endswith(".csv"):
                return parse_csv_edges(archive.read(name).decode("utf-8"))
    raise ValueError(f"no recognizable edge file in archive: {names}")


def largest_component(edges: list[tuple[int, int]]) -> list[tuple[int, int]]:
    # Undirected, simple: drop self-loops and duplicate/reversed copies.
    simple = {(min(u, v), max(u, v)) for u, v in edges if u != v}
    adjacency: dict[int, set[int]] = {}
    for u, v in simple:
        adjacency.setdefault(u, set()).add(v)
        adjacency.setdefault(v, set()).add(u)

    seen: set[int] = set()
    best: set[int] = set()
    for start in adjacency:
        if start in seen:
            continue
        component = {start}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            for neighbor in adjacency[node]:
                if neighbor not in component:
                    component.add(neighbor)
                    queue.append(neighbor)
        seen |= component
        if len(component) > len(best):
            best = component

    relabel = {old: new for new, old in enumerate(sorted(best))}
    return sorted(
        (relabel[u], relabel[v]) for u, v in simple if u in best and v in best
    )


def main() -> int:
    default_out = Path(__file__).resolve().parent.parent / "data" / "polblogs_lcc.txt"
    out_path = Path(sys.argv[1]) if len(sys.argv) > 1 else default_out

    payload = None
    errors = []
    for url in SOURCES:
        try:
            print(f"fetching {url} ...")
            payload = download(url)
            break
        except Exception as exc:  # noqa: BLE001 - report and try the next mirror
            errors.append(f"  {url}: {exc}")
    if payload is None:
        print("all sources failed:", *errors, sep="\n", file=sys.stderr)
        return 1

    edges = largest_component(extract_edges(payload))
    n = max(max(u, v) for u, v in edges) + 1
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as handle:
        handle.write("# political-blogs hyperlink network, largest connected component\n")
        handle.write("# undirected, simple; nodes relabeled 0..n-1\n")
        for u, v in edges:
            handle.write(f"{u} {v}\n")
    print(f"wrote {out_path}: {n} nodes, {len(edges)} edges")
    if n != 1222 or len(edges) != 16714:
        print(
            "warning: expected 1222 nodes / 16714 edges; the source data may have changed",
            file=sys.stderr,
        )
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
