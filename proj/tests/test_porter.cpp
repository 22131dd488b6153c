#include <gtest/gtest.h>

#include <utility>
#include <vector>

#include "neusum/porter.hpp"

using neusum::stem;

// Pairs from the published Porter vocabulary and output lists.
TEST(Porter, PublishedVectors) {
  const std::vector<std::pair<std::string, std::string>> cases{
      {"caresses", "caress"},     {"ponies", "poni"},           {"ties", "ti"},
      {"caress", "caress"},       {"cats", "cat"},              {"feed", "feed"},
      {"agreed", "agre"},         {"plastered", "plaster"},     {"bled", "bled"},
      {"motoring", "motor"},      {"sing", "sing"},             {"conflated", "conflat"},
      {"troubled", "troubl"},     {"sized", "size"},            {"hopping", "hop"},
      {"tanned", "tan"},          {"falling", "fall"},          {"hissing", "hiss"},
      {"fizzed", "fizz"},         {"failing", "fail"},          {"filing", "file"},
      {"happy", "happi"},         {"sky", "sky"},               {"relational", "relat"},
      {"conditional", "condit"},  {"rational", "ration"},       {"valenci", "valenc"},
      {"hesitanci", "hesit"},     {"digitizer", "digit"},       {"conformabli", "conform"},
      {"radicalli", "radic"},     {"differentli", "differ"},    {"vileli", "vile"},
      {"analogousli", "analog"},  {"vietnamization", "vietnam"}, {"predication", "predic"},
      {"operator", "oper"},       {"feudalism", "feudal"},      {"decisiveness", "decis"},
      {"hopefulness", "hope"},    {"callousness", "callous"},   {"formaliti", "formal"},
      {"sensitiviti", "sensit"},  {"sensibiliti", "sensibl"},   {"triplicate", "triplic"},
      {"formative", "form"},      {"formalize", "formal"},      {"electriciti", "electr"},
      {"electrical", "electr"},   {"hopeful", "hope"},          {"goodness", "good"},
      {"revival", "reviv"},       {"allowance", "allow"},       {"inference", "infer"},
      {"airliner", "airlin"},     {"gyroscopic", "gyroscop"},   {"adjustable", "adjust"},
      {"defensible", "defens"},   {"irritant", "irrit"},        {"replacement", "replac"},
      {"adjustment", "adjust"},   {"dependent", "depend"},      {"adoption", "adopt"},
      {"homologou", "homolog"},   {"communism", "commun"},      {"activate", "activ"},
      {"angulariti", "angular"},  {"homologous", "homolog"},    {"effective", "effect"},
      {"bowdlerize", "bowdler"},  {"probate", "probat"},        {"rate", "rate"},
      {"cease", "ceas"},          {"controll", "control"},      {"roll", "roll"},
      {"running", "run"},         {"generalization", "gener"},
  };
  for (const auto& [in, out] : cases) EXPECT_EQ(stem(in), out) << in;
}

TEST(Porter, ShortAndNonAlphabeticUnchanged) {
  EXPECT_EQ(stem("cat"), "cat");
  EXPECT_EQ(stem("is"), "is");
  EXPECT_EQ(stem("123"), "123");
  EXPECT_EQ(stem("don't"), "don't");
  EXPECT_EQ(stem(""), "");
}

TEST(Porter, Idempotent) {
  for (const char* w : {"running", "generalization", "caresses", "hopeful", "relational"}) {
    const std::string once = stem(w);
    EXPECT_EQ(stem(once), once) << w;
  }
}
