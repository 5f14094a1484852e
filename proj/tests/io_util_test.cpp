#include <gtest/gtest.h>

#include <atomic>
#include <cstdio>
#include <numeric>

#include "explika/io.hpp"
#include "explika/parallel.hpp"
#include "explika/rng.hpp"

#include "test_util.hpp"

using namespace explika;

TEST(Csv, ParsesQuotedFieldsAndCrlf) {
    testutil::TempDir dir("csv");
    write_file(dir.file("a.csv"), "name,\"no,tes\"\r\n\"line\nbreak\",\"he said \"\"hi\"\"\"\r\n1,2\r\n");
    const CsvContent c = read_csv(dir.file("a.csv"));
    ASSERT_EQ(c.header.size(), 2u);
    EXPECT_EQ(c.header[1], "no,tes");
    ASSERT_EQ(c.rows.size(), 2u);
    EXPECT_EQ(c.rows[0][0], "line\nbreak");
    EXPECT_EQ(c.rows[0][1], "he said \"hi\"");
}

TEST(Csv, RaggedRowIsAnError) {
    testutil::TempDir dir("csv_ragged");
    write_file(dir.file("a.csv"), "a,b\n1,2,3\n");
    EXPECT_THROW(read_csv(dir.file("a.csv")), data_error);
}

TEST(Csv, MissingFileIsAnError) {
    EXPECT_THROW(read_csv("/nonexistent/nope.csv"), data_error);
}

TEST(Csv, EscapeRoundTrip) {
    EXPECT_EQ(csv_escape("plain"), "plain");
    EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_escape("q\"q"), "\"q\"\"q\"");
}

TEST(Format, NineSignificantDigits) {
    EXPECT_EQ(format_g9(0.1), "0.1");
    EXPECT_EQ(format_g9(1.0 / 3.0), "0.333333333");
    EXPECT_EQ(format_g9(123456789012.0), "1.23456789e+11");
    EXPECT_EQ(format_g9(0.0), "0");
}

TEST(Format, ParseDoubleHandlesJunk) {
    EXPECT_EQ(parse_double("1.5").value(), 1.5);
    EXPECT_EQ(parse_double("  -9 ").value(), -9.0);
    EXPECT_FALSE(parse_double("abc").has_value());
    EXPECT_FALSE(parse_double("1.5x").has_value());
    EXPECT_FALSE(parse_double("").has_value());
}

TEST(Json, WriterEscapesAndOrders) {
    JsonWriter w;
    w.begin_object();
    w.kv("s", "a\"b\\c\nd");
    w.kv("x", 0.5);
    w.key("arr");
    w.begin_array();
    w.value(1);
    w.value(true);
    w.end_array();
    w.end_object();
    EXPECT_EQ(w.str(), "{\"s\":\"a\\\"b\\\\c\\nd\",\"x\":0.5,\"arr\":[1,true]}");
}

TEST(Json, RawValueSplices) {
    JsonWriter w;
    w.begin_object();
    w.key("inner");
    w.raw_value("{\"a\":1}");
    w.kv("b", 2);
    w.end_object();
    EXPECT_EQ(w.str(), "{\"inner\":{\"a\":1},\"b\":2}");
}

TEST(Hash, Fnv1aKnownVector) {
    // FNV-1a 64 reference values.
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(fnv1a64_hex("a"), "af63dc4c8601ec8c");
}

TEST(Rng, DerivedSeedsDiffer) {
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
    EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(Rng, Uniform01InRangeAndDeterministic) {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        const double u = uniform01(a);
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_EQ(u, uniform01(b));
    }
}

TEST(Rng, NormalMoments) {
    Rng rng(7);
    double sum = 0.0, sumsq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = normal01(rng);
        sum += z;
        sumsq += z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.01);
    EXPECT_NEAR(sumsq / n, 1.0, 0.02);
}

TEST(Rng, SampleWithoutReplacementIsAPermutationPrefix) {
    Rng rng(5);
    const auto s = sample_without_replacement(rng, 10, 4);
    ASSERT_EQ(s.size(), 4u);
    for (const auto v : s) EXPECT_LT(v, 10u);
    auto sorted = s;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
}

TEST(Parallel, ResultsIndependentOfThreadCount) {
    std::vector<double> serial(257), parallel(257);
    {
        testutil::ScopedEnv env("EXPLIKA_THREADS", "1");
        parallel_for(serial.size(), [&](std::size_t i) {
            Rng rng = make_rng(99, i);
            serial[i] = uniform01(rng);
        });
    }
    {
        testutil::ScopedEnv env("EXPLIKA_THREADS", "4");
        parallel_for(parallel.size(), [&](std::size_t i) {
            Rng rng = make_rng(99, i);
            parallel[i] = uniform01(rng);
        });
    }
    EXPECT_EQ(serial, parallel);
}

TEST(Parallel, PropagatesExceptions) {
    testutil::ScopedEnv env("EXPLIKA_THREADS", "3");
    EXPECT_THROW(parallel_for(100, [&](std::size_t i) {
        if (i == 57) throw data_error("boom");
    }), data_error);
}
