#include "membrane/flattening.hpp"
#include "membrane/mesh_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace membrane;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path d = fs::temp_directory_path() /
                       ("membrane_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(d);
    return d;
}

std::string node_block(const char *nodes) {
    return std::string("membrane-mesh 1\nunits m kN\n") + nodes;
}

} // namespace

TEST(MeshIo, RoundTripIsExact) {
    auto m = generate_hp_mesh(10.0, 11);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1e-3, 1e-3);
    for (auto &p : m.nodes) p += Vec3(u(rng), u(rng), u(rng)); // non-representable decimals
    for (auto &t : m.elements) t.material_angle = u(rng) * 1000.0;
    const fs::path f = temp_dir() / "hp.txt";
    save_mesh(m, f);
    const SurfaceMesh r = load_mesh(f);
    ASSERT_EQ(r.node_count(), m.node_count());
    for (Index i = 0; i < m.node_count(); ++i) {
        EXPECT_EQ(r.nodes[i], m.nodes[i]);
        EXPECT_EQ(r.fixed[i], m.fixed[i]);
    }
    ASSERT_EQ(r.element_count(), m.element_count());
    for (Index k = 0; k < m.element_count(); ++k) {
        EXPECT_EQ(r.elements[k].nodes, m.elements[k].nodes);
        EXPECT_EQ(r.elements[k].material_angle, m.elements[k].material_angle);
        EXPECT_EQ(r.element_sheet[k], m.element_sheet[k]);
    }
    EXPECT_FALSE(fs::exists(fs::path(f) += ".tmp"));
}

TEST(MeshIo, PatternRoundTripKeepsSurfaceIds) {
    const auto m = generate_hp_mesh(10.0, 6);
    const PatternSheet p = project_to_plane(m, 1, ProjectionMode::parallel_to(Vec3::UnitZ()));
    const fs::path f = temp_dir() / "sheet1.txt";
    save_pattern(p, f);
    const PatternSheet r = load_pattern(f);
    EXPECT_EQ(r.sheet, 1);
    EXPECT_EQ(r.nodes, p.nodes);
    EXPECT_EQ(r.surface_node, p.surface_node);
    EXPECT_EQ(r.surface_element, p.surface_element);
    for (Index k = 0; k < p.element_count(); ++k) {
        EXPECT_EQ(r.elements[k].nodes, p.elements[k].nodes);
        EXPECT_EQ(r.elements[k].material_angle, p.elements[k].material_angle);
    }
    EXPECT_NO_THROW(validate_against(r, m));
}

TEST(MeshIo, AcceptsCommentsAndArbitraryIds) {
    const auto m = parse_mesh(node_block("# a single triangle\n"
                                         "nodes 3\n"
                                         "10 0 0 0 111\n"
                                         "20 1 0 0 111   # second\n"
                                         "30 0 1 0 001\n"
                                         "\n"
                                         "elements 1\n"
                                         "7 10 20 30 0 0.25\n"));
    EXPECT_EQ(m.elements[0].nodes, (std::array<Index, 3>{0, 1, 2}));
    EXPECT_EQ(m.fixed[2], (std::array<bool, 3>{false, false, true}));
    EXPECT_EQ(m.elements[0].material_angle, 0.25);
}

TEST(MeshIo, DuplicateNodeInElementIsValidationError) {
    EXPECT_THROW(parse_mesh(node_block("nodes 3\n0 0 0 0 111\n1 1 0 0 111\n2 0 1 0 111\n"
                                       "elements 1\n0 0 1 1 0 0\n")),
                 ValidationError);
}

TEST(MeshIo, EmptyElementListIsValidationError) {
    EXPECT_THROW(parse_mesh(node_block("nodes 3\n0 0 0 0 111\n1 1 0 0 111\n2 0 1 0 111\n"
                                       "elements 0\n")),
                 ValidationError);
}

TEST(MeshIo, ParseErrorsNameLineAndField) {
    try {
        parse_mesh(node_block("nodes 2\n0 0 0 0 111\n1 1 abc 0 111\n"));
        FAIL() << "expected ParseError";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 5u);
        EXPECT_EQ(e.field(), "y");
    }
    try {
        parse_mesh(node_block("nodes 1\n0 0 0 0 1x1\nelements 0\n"));
        FAIL() << "expected ParseError";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 4u);
        EXPECT_EQ(e.field(), "fixed");
    }
    try {
        parse_mesh(node_block("nodes 3\n0 0 0 0 111\n1 1 0 0 111\n2 0 1 0 111\n"
                              "elements 1\n0 0 1 9 0 0\n"));
        FAIL() << "expected ParseError";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 8u);
        EXPECT_EQ(e.field(), "n3");
    }
}

TEST(MeshIo, HeaderChecks) {
    EXPECT_THROW(parse_mesh("membrane-mesh 2\nunits m kN\n"), ParseError);
    EXPECT_THROW(parse_mesh("membrane-mesh 1\nunits mm kN\n"), ParseError);
    EXPECT_THROW(parse_mesh("membrane-mesh 1\nunits m kN\nnodes 2\n0 0 0 0 111\n"), ParseError);
    EXPECT_THROW(parse_mesh(node_block("nodes 1\n0 0 0 0 111\n0 1 1 1 111\n")), ParseError);
}

TEST(MeshIo, PatternSheetMismatchIsParseError) {
    EXPECT_THROW(parse_pattern("membrane-pattern 1\nunits m kN\nsheet 0\nnodes 3\n"
                               "0 0 0\n1 1 0\n2 0 1\nelements 1\n0 0 1 2 1 0\n"),
                 ParseError);
}

TEST(MeshIo, ReversedPatternTriangleRejected) {
    EXPECT_THROW(parse_pattern("membrane-pattern 1\nunits m kN\nsheet 0\nnodes 3\n"
                               "0 0 0\n1 1 0\n2 0 1\nelements 1\n0 0 2 1 0 0\n"),
                 PatternError);
}

TEST(MeshIo, AtomicWriteReplacesContent) {
    const fs::path f = temp_dir() / "out.txt";
    write_file_atomic(f, "first");
    write_file_atomic(f, "second");
    EXPECT_EQ(read_file(f), "second");
    EXPECT_THROW(write_file_atomic(temp_dir() / "missing" / "x.txt", "x"), Error);
}
