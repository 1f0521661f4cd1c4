import json
from collections.abc import Hashable, Iterable
from os.path import join as pjoin

from omega_orbits import config as cf
from omega_orbits.core.errors import CapacityError


def check_capacity(what: str, size: int, limit: int | None = None) -> None:
    limit = cf.MAX_CANDIDATES if limit is None else limit
    if size > limit:
        raise CapacityError(what, size, limit)


def write_schema(name: str, schema: dict, directory: str | None = None) -> str:
    """Writes a JSON schema file and registers it among the available schemas.

    Args:
        name (str): The schema name, used as file stem.
        schema (dict): The JSON schema document.
        directory (str | None, optional): Target directory. Defaults to cf.SCHEMAS_DIR.

    Returns:
        str: The path of the written file.
    """
    path = pjoin(directory or cf.SCHEMAS_DIR, name + ".json")
    with open(path, "w") as f:
        json.dump(schema, f, indent=2, sort_keys=True)
        f.write("\n")
    if name not in cf.AVAILABLE_SCHEMAS:
        cf.AVAILABLE_SCHEMAS.append(name)
    return path


def load_schema(name: str) -> dict:
    if name not in cf.AVAILABLE_SCHEMAS:
        raise ValueError(
            f"Schema {name} not among shipped schemas. Please choose one among : {cf.AVAILABLE_SCHEMAS}"
        )
    with open(pjoin(cf.SCHEMAS_DIR, name + ".json"), "r") as f:
        return json.load(f)


class UnionFind:
    """Disjoint sets with union by rank and path compression."""

    def __init__(self, items: Iterable[Hashable]):
        self.parent = {x: x for x in items}
        self.rank = {x: 0 for x in self.parent}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y) -> bool:
        x, y = self.find(x), self.find(y)
        if x == y:
            return False
        if self.rank[x] < self.rank[y]:
            x, y = y, x
        elif self.rank[x] == self.rank[y]:
            self.rank[x] += 1
        self.parent[y] = x
        return True

    def classes(self, order: Iterable[Hashable] | None = None) -> list[list]:
        """Returns the classes, each listed in ``order`` (default insertion order),
        classes sorted by their first member's position."""
        order = list(self.parent) if order is None else list(order)
        groups: dict = {}
        for x in order:
            groups.setdefault(self.find(x), []).append(x)
        return list(groups.values())
