// Domain presets, structured triangulation and uniform refinement.
//
// Counting facts are asserted directly; the refined-mesh/fresh-mesh
// equivalence goes through a canonical-form isomorphism check and every
// generated mesh is pushed through the full invariant checker.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "tmcert/geometry.hpp"

using namespace tmcert;
using namespace tmcert::geometry;

namespace {

// canonical form: triangles as sorted triples of quantized coordinates
using QPoint = std::pair<long long, long long>;
QPoint quant(const std::array<double, 2>& p) {
    return {std::llround(p[0] * 1048576.0 * 1024.0), std::llround(p[1] * 1048576.0 * 1024.0)};
}

std::multiset<std::array<QPoint, 3>> canonical_tris(const TriMesh& m) {
    std::multiset<std::array<QPoint, 3>> out;
    for (const auto& t : m.tris) {
        std::array<QPoint, 3> q = {quant(m.nodes[t[0]]), quant(m.nodes[t[1]]),
                                   quant(m.nodes[t[2]])};
        std::sort(q.begin(), q.end());
        out.insert(q);
    }
    return out;
}

std::multiset<std::pair<std::pair<QPoint, QPoint>, EdgeTag>> canonical_boundary(const TriMesh& m) {
    std::multiset<std::pair<std::pair<QPoint, QPoint>, EdgeTag>> out;
    for (const auto& e : m.boundary_edges) {
        auto a = quant(m.nodes[e.a]), b = quant(m.nodes[e.b]);
        if (b < a) std::swap(a, b);
        out.insert({{a, b}, e.tag});
    }
    return out;
}

}  // namespace

TEST_CASE("unit square counts") {
    const auto dom = preset_domain("rectangle", {{"a", 1.0}, {"b", 1.0}});
    const auto m = triangulate(dom, 0.5);
    CHECK(m.tris.size() == 8);
    CHECK(m.nodes.size() == 9);

    for (int n : {4, 8, 16}) {
        const auto mn = triangulate(dom, 1.0 / n);
        CHECK(mn.tris.size() == static_cast<std::size_t>(2 * n * n));
        CHECK(mn.nodes.size() == static_cast<std::size_t>((n + 1) * (n + 1)));
        validate_mesh(mn);
    }
}

TEST_CASE("preset meshes satisfy all invariants") {
    struct Case {
        const char* name;
        std::map<std::string, double> params;
        long euler;
    };
    const Case cases[] = {
        {"rectangle", {{"a", 2.0}, {"b", 1.0}}, 1},
        {"l_shape", {{"T", 4.0}}, 1},
        {"x_shape", {{"T", 4.0}}, 1},
        {"square_annulus", {{"a", 1.0}, {"b", 0.5}}, 0},
        {"half_guide_mixed", {{"a", 1.0}, {"b", 1.0}}, 1},
    };
    for (const auto& c : cases) {
        CAPTURE(c.name);
        const auto m = triangulate(preset_domain(c.name, c.params), 1.0 / 8);
        const auto st = validate_mesh(m, c.euler);
        CHECK(st.min_area > 0);
        CHECK(st.max_diameter <= std::sqrt(2.0) / 8 + 1e-12);

        const auto r = refine(m);
        const auto str = validate_mesh(r, c.euler);
        CHECK(str.n_tris == 4 * st.n_tris);
        CHECK(r.h == m.h / 2);
    }
}

TEST_CASE("l_shape at h=1/8 matches the stated geometry") {
    const auto m = triangulate(preset_domain("l_shape", {{"T", 4.0}}), 1.0 / 8);
    validate_mesh(m);
    // area 1 + 2*4 = 9, two triangles per h^2 cell
    CHECK(m.tris.size() == static_cast<std::size_t>(9 * 64 * 2));

    // artificial faces sit at distance exactly T from the attachment edges
    double max_x = 0, max_y = 0;
    for (const auto& e : m.boundary_edges) {
        if (e.tag != EdgeTag::artificial) continue;
        max_x = std::max(max_x, m.nodes[e.a][0]);
        max_y = std::max(max_y, m.nodes[e.a][1]);
    }
    CHECK(max_x == Catch::Approx(5.0).margin(1e-12));
    CHECK(max_y == Catch::Approx(5.0).margin(1e-12));
}

TEST_CASE("refinement quadruples and matches fresh triangulation up to node order") {
    const auto dom = preset_domain("rectangle", {{"a", 1.0}, {"b", 1.0}});
    const auto m = triangulate(dom, 0.5);
    const auto r = refine(m);
    CHECK(r.tris.size() == 32);

    const auto rr = refine(r);
    const auto fresh = triangulate(dom, 0.125);
    CHECK(canonical_tris(rr) == canonical_tris(fresh));
    CHECK(canonical_boundary(rr) == canonical_boundary(fresh));

    const auto lm = triangulate(preset_domain("l_shape", {{"T", 2.0}}), 0.25);
    CHECK(canonical_tris(refine(refine(lm))) ==
          canonical_tris(triangulate(preset_domain("l_shape", {{"T", 2.0}}), 0.0625)));
}

TEST_CASE("triangulation is deterministic") {
    const auto dom = preset_domain("x_shape", {{"T", 3.0}});
    const auto a = triangulate(dom, 1.0 / 8);
    const auto b = triangulate(dom, 1.0 / 8);
    REQUIRE(a.nodes.size() == b.nodes.size());
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        CHECK(a.nodes[i][0] == b.nodes[i][0]);
        CHECK(a.nodes[i][1] == b.nodes[i][1]);
    }
    CHECK(a.tris == b.tris);
}

TEST_CASE("tag layout per preset") {
    const auto annulus = triangulate(preset_domain("square_annulus", {{"a", 1.0}, {"b", 0.5}}),
                                     1.0 / 8);
    std::size_t inner = 0, outer = 0;
    for (const auto& e : annulus.boundary_edges) {
        if (e.tag == EdgeTag::inner_conductor) ++inner;
        if (e.tag == EdgeTag::outer_conductor) ++outer;
    }
    CHECK(inner + outer == annulus.boundary_edges.size());
    CHECK(inner == 16);  // inner square perimeter 2.0 at h=1/8
    CHECK(outer == 32);

    const auto half = triangulate(preset_domain("half_guide_mixed", {{"a", 1.0}, {"b", 1.0}}),
                                  1.0 / 8);
    std::size_t dir = 0, neu = 0;
    for (const auto& e : half.boundary_edges) {
        if (e.tag == EdgeTag::dirichlet) ++dir;
        if (e.tag == EdgeTag::neumann) ++neu;
    }
    CHECK(dir == 8);   // the symmetry line x = 0
    CHECK(neu == 24);  // remaining three sides
}

TEST_CASE("preset and meshing errors") {
    CHECK_THROWS_AS(preset_domain("moebius"), std::invalid_argument);
    CHECK_THROWS_AS(preset_domain("rectangle", {{"a", -1.0}, {"b", 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(preset_domain("rectangle", {{"b", 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(preset_domain("square_annulus", {{"a", 1.0}, {"b", 1.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(preset_domain("square_annulus", {{"a", 0.5}, {"b", 1.0}}),
                    std::invalid_argument);

    const auto dom = preset_domain("rectangle", {{"a", 1.0}, {"b", 1.0}});
    CHECK_THROWS_AS(triangulate(dom, 0.75), std::invalid_argument);  // h > min feature / 2
    CHECK_THROWS_AS(triangulate(dom, 0.3), std::invalid_argument);   // misaligned with the grid
    CHECK_THROWS_AS(triangulate(dom, -0.1), std::invalid_argument);
}

TEST_CASE("overlapping rectangles are rejected") {
    RectilinearDomain2D d;
    d.name = "overlap";
    d.rects = {{0, 0, 1, 1}, {0.5, 0, 1.5, 1}};
    d.segments = {{0, 0, 1.5, 0, EdgeTag::dirichlet},
                  {0, 1, 1.5, 1, EdgeTag::dirichlet},
                  {0, 0, 0, 1, EdgeTag::dirichlet},
                  {1.5, 0, 1.5, 1, EdgeTag::dirichlet}};
    CHECK_THROWS_AS(triangulate(d, 0.25), std::invalid_argument);
}

TEST_CASE("disconnected domains are rejected") {
    RectilinearDomain2D d;
    d.name = "disconnected";
    d.rects = {{0, 0, 1, 1}, {2, 0, 3, 1}};
    d.segments = {{0, 0, 1, 0, EdgeTag::dirichlet}, {0, 1, 1, 1, EdgeTag::dirichlet},
                  {0, 0, 0, 1, EdgeTag::dirichlet}, {1, 0, 1, 1, EdgeTag::dirichlet},
                  {2, 0, 3, 0, EdgeTag::dirichlet}, {2, 1, 3, 1, EdgeTag::dirichlet},
                  {2, 0, 2, 1, EdgeTag::dirichlet}, {3, 0, 3, 1, EdgeTag::dirichlet}};
    CHECK_THROWS_AS(triangulate(d, 0.25), std::invalid_argument);
}

TEST_CASE("point location agrees with barycentric membership") {
    const auto m = triangulate(preset_domain("l_shape", {{"T", 2.0}}), 0.25);
    DetRng rng(42);
    for (int i = 0; i < 200; ++i) {
        const double x = rng.uniform(0.0, 3.0), y = rng.uniform(0.0, 3.0);
        const bool inside = (x < 1.0 || y < 1.0) && x > 0 && y > 0 && x < 3.0 && y < 3.0;
        const int t = m.locate(x, y);
        if (inside) {
            REQUIRE(t >= 0);
            const auto l = m.barycentric(t, x, y);
            CHECK(std::min({l[0], l[1], l[2]}) >= -1e-9);
        }
    }
    CHECK(m.locate(2.5, 2.5) < 0);
}
