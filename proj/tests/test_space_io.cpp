#include "condexp/space_io.hpp"

#include <gtest/gtest.h>

using namespace condexp;

TEST(SpaceFile, ParsesAndRoundTrips)
{
    const auto d = parse_space(std::string(R"({
        "labels": ["a", "b", "c"],
        "measures": [[0.5, 0.25, 0.25], [0.0, 0.5, 0.5]],
        "partitions": {"p": [[2, 1], [0]], "all": [[0, 1, 2]]}
    })"));
    EXPECT_EQ(d.space.size(), 3u);
    EXPECT_EQ(d.family.count(), 2u);
    EXPECT_EQ(d.partition("p"), Partition(3, {{0}, {1, 2}}));
    EXPECT_THROW(d.partition("missing"), FormatError);
    const auto again = parse_space(to_json(d));
    EXPECT_EQ(again.partition("p"), d.partition("p"));
    EXPECT_EQ(again.family.rows(), d.family.rows());
}

TEST(SpaceFile, OverlapIsRejectedNamingIndex)
{
    try {
        parse_space(std::string(R"({"labels": ["a","b","c"], "measures": [[1,0,0]],
                                    "partitions": {"bad": [[0,1],[1,2]]}})"));
        FAIL() << "expected rejection";
    } catch (const FormatError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("bad"), std::string::npos);
        EXPECT_NE(msg.find("1"), std::string::npos);
    }
}

TEST(SpaceFile, NonCoveringIsRejectedNamingIndex)
{
    try {
        parse_space(std::string(R"({"labels": ["a","b","c"], "measures": [[1,0,0]],
                                    "partitions": {"bad": [[0,1]]}})"));
        FAIL() << "expected rejection";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
    }
}

TEST(SpaceFile, OtherMalformedInputs)
{
    EXPECT_THROW(parse_space(std::string("{")), FormatError);
    EXPECT_THROW(parse_space(std::string(R"({"labels": ["a"]})")), FormatError);
    EXPECT_THROW(parse_space(std::string(R"({"labels": ["a","b"], "measures": [[0.5,0.6]]})")), FormatError);
    EXPECT_THROW(parse_space(std::string(R"({"labels": ["a","b"], "measures": [[1]]})")), FormatError);
    EXPECT_THROW(parse_space(std::string(R"({"labels": ["a","a"], "measures": [[0.5,0.5]]})")), FormatError);
    EXPECT_THROW(parse_space(std::string(R"({"labels": ["a","b"], "measures": [[0.5,0.5]],
                                             "partitions": {"p": [[0, 5]]}})")),
                 FormatError);
    EXPECT_THROW(parse_space(std::string(R"({"labels": ["a","b"], "measures": [[0.5,0.5]],
                                             "partitions": {"p": [[0, -1]]}})")),
                 FormatError);
    EXPECT_THROW(load_space("/nonexistent/space.json"), FormatError);
}
