//! Planarity testing by iterative face embedding
//! (Demoucron-Malgrange-Pertuiset): grow an embedded subgraph by placing
//! one fragment path at a time; a fragment with no admissible face
//! certifies non-planarity. The graph is planar iff every biconnected
//! component is planar.

use std::collections::BTreeSet;

/// True iff the simple undirected graph on `n` vertices is planar.
/// Self-loops and duplicate edges are ignored.
pub fn is_planar(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut cleaned: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &(u, v) in edges {
        assert!(u < n && v < n, "edge ({u},{v}) out of range");
        if u != v {
            cleaned.insert((u.min(v), u.max(v)));
        }
    }
    let edge_list: Vec<(usize, usize)> = cleaned.into_iter().collect();
    for component in biconnected_components(n, &edge_list) {
        if !bicomponent_planar(&component) {
            return false;
        }
    }
    true
}

/// Biconnected components as edge lists (bridges come out as single
/// edges).
fn biconnected_components(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0usize;
    let mut edge_stack: Vec<(usize, usize)> = Vec::new();
    let mut components = Vec::new();

    // Iterative DFS frames: (vertex, parent, next neighbor index).
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (v, parent, ref mut index)) = stack.last_mut() {
            if *index < adj[v].len() {
                let w = adj[v][*index];
                *index += 1;
                if w == parent {
                    continue;
                }
                if disc[w] == usize::MAX {
                    edge_stack.push((v, w));
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, v, 0));
                } else if disc[w] < disc[v] {
                    edge_stack.push((v, w));
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&mut (u, _, _)) = stack.last_mut() {
                    low[u] = low[u].min(low[v]);
                    if low[v] >= disc[u] {
                        // u is an articulation point (or root): pop the
                        // component ending with edge (u, v).
                        let mut component = Vec::new();
                        while let Some(edge) = edge_stack.pop() {
                            component.push(edge);
                            if edge == (u, v) {
                                break;
                            }
                        }
                        if !component.is_empty() {
                            components.push(component);
                        }
                    }
                }
            }
        }
    }
    components
}

/// Planarity of one biconnected component by face embedding.
fn bicomponent_planar(edges: &[(usize, usize)]) -> bool {
    // Remap vertices to 0..v.
    let mut vertices: Vec<usize> = edges
        .iter()
        .flat_map(|&(u, v)| [u, v])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    vertices.sort_unstable();
    let index_of = |global: usize| vertices.binary_search(&global).expect("vertex present");
    let v_count = vertices.len();
    let local: Vec<(usize, usize)> = edges
        .iter()
        .map(|&(u, v)| (index_of(u), index_of(v)))
        .collect();
    let e_count = local.len();
    if e_count <= 3 || v_count <= 4 {
        return true; // any graph this small is planar
    }
    if e_count > 3 * v_count - 6 {
        return false;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); v_count];
    for &(u, v) in &local {
        adj[u].push(v);
        adj[v].push(u);
    }
    for neighbors in &mut adj {
        neighbors.sort_unstable();
    }

    // Seed: any cycle, found via DFS back edge.
    let cycle = find_cycle(v_count, &adj).expect("biconnected graph with >3 edges has a cycle");
    let mut in_h = vec![false; v_count];
    for &v in &cycle {
        in_h[v] = true;
    }
    let mut embedded: BTreeSet<(usize, usize)> = BTreeSet::new();
    for pair in cycle.windows(2) {
        embedded.insert(ordered(pair[0], pair[1]));
    }
    embedded.insert(ordered(cycle[0], *cycle.last().unwrap()));
    let mut faces: Vec<Vec<usize>> = vec![cycle.clone(), cycle];

    while embedded.len() < e_count {
        let fragments = find_fragments(v_count, &adj, &in_h, &embedded);
        debug_assert!(!fragments.is_empty());

        // Admissible faces per fragment; a fragment with none certifies
        // non-planarity, a fragment with exactly one must be placed first.
        let mut chosen: Option<(usize, usize)> = None; // (fragment, face)
        let mut fallback: Option<(usize, usize)> = None;
        for (fragment_index, fragment) in fragments.iter().enumerate() {
            let admissible: Vec<usize> = faces
                .iter()
                .enumerate()
                .filter(|(_, face)| fragment.attachments.iter().all(|a| face.contains(a)))
                .map(|(face_index, _)| face_index)
                .collect();
            match admissible.len() {
                0 => return false,
                1 => {
                    chosen = Some((fragment_index, admissible[0]));
                    break;
                }
                _ => {
                    if fallback.is_none() {
                        fallback = Some((fragment_index, admissible[0]));
                    }
                }
            }
        }
        let (fragment_index, face_index) = chosen.or(fallback).expect("fragments exist");
        let path = fragments[fragment_index].alpha_path(&adj, &in_h);

        // Split the face along the path.
        let face = faces[face_index].clone();
        let start = face.iter().position(|&x| x == path[0]).expect("attachment on face");
        let end = face.iter().position(|&x| x == *path.last().unwrap()).expect("attachment on face");
        let arc_a = walk(&face, start, end);
        let arc_b = walk(&face, end, start);
        let interior: Vec<usize> = path[1..path.len() - 1].to_vec();
        let mut face_one = arc_a;
        face_one.extend(interior.iter().rev());
        let mut face_two = arc_b;
        face_two.extend(interior.iter());
        faces[face_index] = face_one;
        faces.push(face_two);

        for &v in &path {
            in_h[v] = true;
        }
        for pair in path.windows(2) {
            embedded.insert(ordered(pair[0], pair[1]));
        }
    }
    true
}

fn ordered(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

/// Forward walk around a face cycle from index `from` to index `to`,
/// inclusive of both endpoints.
fn walk(face: &[usize], from: usize, to: usize) -> Vec<usize> {
    let len = face.len();
    let mut out = vec![face[from]];
    let mut index = from;
    while index != to {
        index = (index + 1) % len;
        out.push(face[index]);
    }
    out
}

/// A cycle through the first edge: BFS path between its endpoints in the
/// graph without that edge (exists in a biconnected component).
fn find_cycle(n: usize, adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    let (u, v) = (0..n)
        .flat_map(|a| adj[a].iter().map(move |&b| (a, b)))
        .find(|&(a, b)| a < b)?;
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    seen[u] = true;
    let mut queue = std::collections::VecDeque::from([u]);
    while let Some(x) = queue.pop_front() {
        for &w in &adj[x] {
            if x == u && w == v {
                continue; // skip the chord itself
            }
            if !seen[w] {
                seen[w] = true;
                parent[w] = x;
                queue.push_back(w);
            }
        }
    }
    if !seen[v] {
        return None;
    }
    let mut cycle = vec![v];
    let mut cursor = v;
    while cursor != u {
        cursor = parent[cursor];
        cycle.push(cursor);
    }
    Some(cycle)
}

struct Fragment {
    attachments: Vec<usize>,
    /// Component vertices outside H; empty for a chord.
    interior: Vec<usize>,
    /// For a chord fragment: the single unembedded edge.
    chord: Option<(usize, usize)>,
}

impl Fragment {
    /// A path through the fragment between two distinct attachments.
    fn alpha_path(&self, adj: &[Vec<usize>], in_h: &[bool]) -> Vec<usize> {
        if let Some((u, v)) = self.chord {
            return vec![u, v];
        }
        let source = self.attachments[0];
        let mut inside = vec![false; adj.len()];
        for &v in &self.interior {
            inside[v] = true;
        }
        // BFS from the source attachment through interior vertices until
        // another attachment is reached.
        let mut parent = vec![usize::MAX; adj.len()];
        let mut seen = vec![false; adj.len()];
        let mut queue = std::collections::VecDeque::new();
        seen[source] = true;
        for &w in &adj[source] {
            if inside[w] && !seen[w] {
                seen[w] = true;
                parent[w] = source;
                queue.push_back(w);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if in_h[w] && w != source {
                    // Reached another attachment: reconstruct.
                    let mut path = vec![w, v];
                    let mut cursor = v;
                    while parent[cursor] != usize::MAX {
                        cursor = parent[cursor];
                        path.push(cursor);
                    }
                    path.reverse();
                    return path;
                }
                if inside[w] && !seen[w] {
                    seen[w] = true;
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
        unreachable!("biconnected fragment has a second attachment");
    }
}

/// Fragments of G relative to the embedded subgraph H: chords (unembedded
/// edges between H-vertices) and connected components of G - H with
/// their attachment vertices.
fn find_fragments(
    n: usize,
    adj: &[Vec<usize>],
    in_h: &[bool],
    embedded: &BTreeSet<(usize, usize)>,
) -> Vec<Fragment> {
    let mut fragments = Vec::new();
    for v in 0..n {
        if !in_h[v] {
            continue;
        }
        for &w in &adj[v] {
            if in_h[w] && v < w && !embedded.contains(&(v, w)) {
                fragments.push(Fragment {
                    attachments: vec![v, w],
                    interior: Vec::new(),
                    chord: Some((v, w)),
                });
            }
        }
    }
    let mut assigned = vec![false; n];
    for start in 0..n {
        if in_h[start] || assigned[start] {
            continue;
        }
        let mut interior = Vec::new();
        let mut attachments = BTreeSet::new();
        let mut queue = std::collections::VecDeque::from([start]);
        assigned[start] = true;
        while let Some(v) = queue.pop_front() {
            interior.push(v);
            for &w in &adj[v] {
                if in_h[w] {
                    attachments.insert(w);
                } else if !assigned[w] {
                    assigned[w] = true;
                    queue.push_back(w);
                }
            }
        }
        fragments.push(Fragment {
            attachments: attachments.into_iter().collect(),
            interior,
            chord: None,
        });
    }
    fragments
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j));
            }
        }
        edges
    }

    fn complete_bipartite(a: usize, b: usize) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for i in 0..a {
            for j in 0..b {
                edges.push((i, a + j));
            }
        }
        edges
    }

    #[test]
    fn small_and_sparse_graphs_are_planar() {
        assert!(is_planar(0, &[]));
        assert!(is_planar(5, &[])); // isolated vertices
        assert!(is_planar(4, &complete(4)));
        assert!(is_planar(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)])); // path
        assert!(is_planar(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])); // cycle
    }

    #[test]
    fn k5_and_k33_are_not_planar() {
        assert!(!is_planar(5, &complete(5)));
        assert!(!is_planar(6, &complete_bipartite(3, 3)));
        assert!(!is_planar(8, &complete_bipartite(4, 4)));
        assert!(!is_planar(6, &complete(6)));
    }

    #[test]
    fn one_edge_short_of_kuratowski_is_planar() {
        let mut k5 = complete(5);
        k5.pop();
        assert!(is_planar(5, &k5));
        let mut k33 = complete_bipartite(3, 3);
        k33.pop();
        assert!(is_planar(6, &k33));
    }

    #[test]
    fn petersen_graph_is_not_planar() {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5)); // outer cycle
            edges.push((5 + i, 5 + (i + 2) % 5)); // inner pentagram
            edges.push((i, 5 + i)); // spokes
        }
        assert!(!is_planar(10, &edges));
    }

    #[test]
    fn subdivisions_preserve_planarity_status() {
        // Subdivide every K5 edge once: still non-planar.
        let k5 = complete(5);
        let mut edges = Vec::new();
        let mut next = 5;
        for &(u, v) in &k5 {
            edges.push((u, next));
            edges.push((next, v));
            next += 1;
        }
        assert!(!is_planar(next, &edges));

        // Subdivided K4: planar.
        let k4 = complete(4);
        let mut edges = Vec::new();
        let mut next = 4;
        for &(u, v) in &k4 {
            edges.push((u, next));
            edges.push((next, v));
            next += 1;
        }
        assert!(is_planar(next, &edges));
    }

    #[test]
    fn grid_and_wheel_are_planar() {
        // 5x5 grid.
        let side = 5;
        let mut edges = Vec::new();
        for row in 0..side {
            for column in 0..side {
                let v = row * side + column;
                if column + 1 < side {
                    edges.push((v, v + 1));
                }
                if row + 1 < side {
                    edges.push((v, v + side));
                }
            }
        }
        assert!(is_planar(side * side, &edges));

        // Wheel W8: hub 0, rim 1..=8.
        let mut wheel = Vec::new();
        for i in 1..=8 {
            wheel.push((0, i));
            wheel.push((i, if i == 8 { 1 } else { i + 1 }));
        }
        assert!(is_planar(9, &wheel));
    }

    #[test]
    fn octahedron_is_planar() {
        // K2,2,2: 6 vertices, 12 edges, maximal planar.
        let parts = [(0, 1), (2, 3), (4, 5)];
        let mut edges = Vec::new();
        for (pi, &(a, b)) in parts.iter().enumerate() {
            for (qi, &(c, d)) in parts.iter().enumerate() {
                if pi < qi {
                    edges.extend([(a, c), (a, d), (b, c), (b, d)]);
                }
            }
        }
        assert_eq!(edges.len(), 12);
        assert!(is_planar(6, &edges));
    }

    #[test]
    fn cut_vertices_split_correctly() {
        // Two K4 blocks sharing vertex 0: planar.
        let mut edges = complete(4);
        for i in 4..7 {
            edges.push((0, i));
            for j in (i + 1)..7 {
                edges.push((i, j));
            }
        }
        assert!(is_planar(7, &edges));

        // K5 hanging off a path: non-planar via its biconnected core.
        let mut edges = complete(5);
        edges.push((4, 5));
        edges.push((5, 6));
        assert!(!is_planar(7, &edges));
    }
}
