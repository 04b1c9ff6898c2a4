#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "support/oracles.hpp"
#include "wsgd/io.hpp"

using namespace wsgd;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& content)
{
    const auto dir = std::filesystem::temp_directory_path() / "wsgd_io_test";
    std::filesystem::create_directories(dir);
    const auto p = dir / name;
    std::ofstream(p) << content;
    return p;
}

} // namespace

TEST(Format, ShortestRoundTrip)
{
    oracle::Gen gen(71);
    for (int k = 0; k < 10000; ++k) {
        const double v = gen.normal() * std::pow(10.0, gen.unif(-30, 30));
        EXPECT_EQ(io::parse_double(io::format_double(v)).value(), v);
    }
    EXPECT_EQ(io::format_double(0.1), "0.1");
    EXPECT_EQ(io::format_double(1.0 / 3.0), "0.3333333333333333");
}

TEST(Parse, RejectsGarbage)
{
    EXPECT_FALSE(io::parse_double("abc"));
    EXPECT_FALSE(io::parse_double("1.0x"));
    EXPECT_FALSE(io::parse_double(""));
    EXPECT_DOUBLE_EQ(io::parse_double(" +2.5 ").value(), 2.5);
    EXPECT_DOUBLE_EQ(io::parse_double("-1e-3").value(), -1e-3);
}

TEST(MatrixMarket, ArrayIsColumnMajor)
{
    std::istringstream is("%%MatrixMarket matrix array real general\n% comment\n2 3\n1\n2\n3\n4\n5\n6\n");
    const DenseMatrix A = io::read_matrix_market(is);
    ASSERT_EQ(A.rows(), 2);
    ASSERT_EQ(A.cols(), 3);
    EXPECT_EQ(A(0, 0), 1);
    EXPECT_EQ(A(1, 0), 2);
    EXPECT_EQ(A(0, 1), 3);
    EXPECT_EQ(A(1, 2), 6);
}

TEST(MatrixMarket, CoordinateAndSymmetric)
{
    std::istringstream is(
        "%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 2.0\n3 1 -1.5\n2 2 4\n");
    const DenseMatrix A = io::read_matrix_market(is);
    EXPECT_EQ(A(0, 0), 2.0);
    EXPECT_EQ(A(2, 0), -1.5);
    EXPECT_EQ(A(0, 2), -1.5);
    EXPECT_EQ(A(1, 1), 4.0);
    EXPECT_EQ(A(2, 2), 0.0);
}

TEST(MatrixMarket, Errors)
{
    std::istringstream bad_header("%%MatrixMarket vector array real general\n1 1\n1\n");
    EXPECT_THROW(io::read_matrix_market(bad_header), IoError);
    std::istringstream complex("%%MatrixMarket matrix array complex general\n1 1\n1 0\n");
    EXPECT_THROW(io::read_matrix_market(complex), IoError);
    std::istringstream truncated("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n");
    EXPECT_THROW(io::read_matrix_market(truncated), IoError);
    std::istringstream range("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n");
    EXPECT_THROW(io::read_matrix_market(range), IoError);
}

TEST(Csv, HeaderOptional)
{
    std::istringstream with("c0,c1\n1,2\n3,4\n");
    std::istringstream without("1,2\n3,4\n\n");
    const DenseMatrix A = io::read_csv_matrix(with);
    const DenseMatrix B = io::read_csv_matrix(without);
    EXPECT_EQ(A, B);
    EXPECT_EQ(A(1, 0), 3.0);
    std::istringstream ragged("1,2\n3\n");
    EXPECT_THROW(io::read_csv_matrix(ragged), IoError);
    std::istringstream garbage("1,2\nx,4\n");
    EXPECT_THROW(io::read_csv_matrix(garbage), IoError);
}

TEST(Files, MatrixAndVectorRoundTrip)
{
    oracle::Gen gen(72);
    const DenseMatrix A = gen.matrix(7, 3, 1.0);
    const Vector b = gen.vector(7);
    std::ostringstream ma;
    io::write_csv_matrix(ma, A);
    std::ostringstream vb;
    io::write_vector(vb, b);
    const auto pa = temp_file("A.csv", ma.str());
    const auto pb = temp_file("b.txt", vb.str());
    EXPECT_EQ(io::read_matrix(pa.string()), A);
    EXPECT_EQ(io::read_vector(pb.string()), b);

    const auto mm = temp_file("A.mtx", "%%MatrixMarket matrix array real general\n2 1\n5\n6\n");
    const Vector v = io::read_vector(mm.string());
    EXPECT_EQ(v(1), 6.0);
    EXPECT_EQ(io::read_matrix(mm.string()).rows(), 2);
}

TEST(Files, MissingPathNamedInError)
{
    try {
        io::read_vector("/nonexistent/rhs.txt");
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/rhs.txt"), std::string::npos);
    }
}
