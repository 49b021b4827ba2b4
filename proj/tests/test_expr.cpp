#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "smcheck/expr.hpp"

using namespace smcheck;

namespace {

double eval(std::string_view text, std::vector<std::pair<std::string, double>> vars = {})
{
    const auto e = ArithExpr::parse(text);
    std::vector<double> values;
    for (const auto& name : e.variables()) {
        double v = NAN;
        for (const auto& [n, x] : vars) {
            if (n == name) {
                v = x;
            }
        }
        values.push_back(v);
    }
    return e.evaluate(values);
}

}  // namespace

TEST(ArithExpr, Precedence)
{
    EXPECT_EQ(eval("1 + 2 * 3"), 7);
    EXPECT_EQ(eval("(1 + 2) * 3"), 9);
    EXPECT_EQ(eval("10 - 4 - 3"), 3);
    EXPECT_EQ(eval("8 / 4 / 2"), 1);
    EXPECT_EQ(eval("-2 * -3"), 6);
    EXPECT_EQ(eval("1 + 2 < 4 && 2 > 1"), 1);
    EXPECT_EQ(eval("0 || 3 == 3"), 1);
    EXPECT_EQ(eval("!0 + 1"), 2);
}

TEST(ArithExpr, Functions)
{
    EXPECT_EQ(eval("abs(-4.5)"), 4.5);
    EXPECT_EQ(eval("sqrt(16)"), 4);
    EXPECT_DOUBLE_EQ(eval("exp(log(7))"), 7);
    EXPECT_EQ(eval("min(3, -1)"), -1);
    EXPECT_EQ(eval("max(3, -1)"), 3);
    EXPECT_EQ(eval("pow(2, 10)"), 1024);
}

TEST(ArithExpr, VariablesInOrderOfFirstUse)
{
    const auto e = ArithExpr::parse("abs(sim - target) + sim * k");
    EXPECT_EQ(e.variables(), (std::vector<std::string>{"sim", "target", "k"}));
    EXPECT_EQ(eval("abs(sim - target)", {{"sim", 3}, {"target", 10}}), 7);
    EXPECT_EQ(eval("efa <= da", {{"efa", 30}, {"da", 34}}), 1);
    EXPECT_EQ(eval("efa <= da", {{"efa", 38}, {"da", 34}}), 0);
}

TEST(ArithExpr, Malformed)
{
    for (const char* bad : {"", "1 +", "(1", "1)", "abs(", "foo(1)", "1 ** 2", "min(1)", "3 $ 4"}) {
        EXPECT_THROW((void)ArithExpr::parse(bad), ExprError) << bad;
    }
}

TEST(ArithExpr, MissingValues)
{
    const auto e = ArithExpr::parse("a + b");
    EXPECT_THROW((void)e.evaluate(std::vector<double>{1.0}), ExprError);
}
