"""Small directed-graph helpers shared by the core, analysis and validation
modules. Graphs are adjacency lists over vertices 0..n-1."""

from __future__ import annotations


def bfs_distances(adjacency: list[list[int]], source: int) -> list[int]:
    """Shortest-path lengths from ``source``; -1 for unreachable vertices."""
    dist = [-1] * len(adjacency)
    dist[source] = 0
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            du = dist[u] + 1
            for v in adjacency[u]:
                if dist[v] < 0:
                    dist[v] = du
                    nxt.append(v)
        frontier = nxt
    return dist


def strongly_connected_components(adjacency: list[list[int]]) -> list[list[int]]:
    """Tarjan's algorithm, iterative. Components are sorted internally and
    returned in order of their smallest vertex."""
    n = len(adjacency)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    components: list[list[int]] = []
    counter = 0

    for root in range(n):
        if index[root] >= 0:
            continue
        # Explicit DFS stack of (vertex, iterator position).
        work = [(root, 0)]
        while work:
            v, pi = work.pop()
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            for i in range(pi, len(adjacency[v])):
                w = adjacency[v][i]
                if index[w] < 0:
                    work.append((v, i + 1))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comp.sort()
                components.append(comp)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    components.sort(key=lambda c: c[0])
    return components


def closed_components(adjacency: list[list[int]]) -> tuple[list[list[int]], list[tuple[int, int]]]:
    """Strongly connected components plus any edges that leave their component."""
    comps = strongly_connected_components(adjacency)
    comp_of = {}
    for ci, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = ci
    exits = []
    for u in range(len(adjacency)):
        for v in adjacency[u]:
            if comp_of[u] != comp_of[v]:
                exits.append((u, v))
    return comps, exits
