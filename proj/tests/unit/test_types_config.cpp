#include <gtest/gtest.h>

#include <map>

#include "promptopt/config.hpp"
#include "promptopt/errors.hpp"
#include "promptopt/types.hpp"

using namespace promptopt;

TEST(Types, NormalizeWhitespace) {
  EXPECT_EQ(normalize_whitespace("  a \t b\n\nc  "), "a b c");
  EXPECT_EQ(normalize_whitespace(""), "");
  EXPECT_EQ(normalize_whitespace(" \n "), "");
}

TEST(Types, FingerprintIgnoresWhitespaceLayout) {
  EXPECT_EQ(prompt_fingerprint("Rank the items.\nBe brief."), prompt_fingerprint("  Rank the items. Be   brief. "));
  EXPECT_NE(prompt_fingerprint("Rank the items."), prompt_fingerprint("Rank the item."));
}

TEST(Types, OriginRoundTrip) {
  for (auto o : {PromptOrigin::initial, PromptOrigin::refined, PromptOrigin::augmented}) {
    EXPECT_EQ(parse_origin(to_string(o)), o);
  }
  EXPECT_THROW(parse_origin("mutated"), std::invalid_argument);
}

TEST(Types, StructuralChecks) {
  EXPECT_THROW(check_item(Item{0, "x"}), std::invalid_argument);
  EXPECT_THROW(check_item(Item{1, "  "}), std::invalid_argument);
  EXPECT_NO_THROW(check_item(Item{1, "x"}));

  Session s{"s1", {Item{1, "a"}, Item{2, "b"}}, Item{1, "c"}, "d", 0};
  EXPECT_NO_THROW(check_session(s));
  s.target.title = "a";
  EXPECT_THROW(check_session(s), std::invalid_argument);
  s.interactions.clear();
  EXPECT_THROW(check_session(s), std::invalid_argument);

  CandidateSet cs{{Item{1, "a"}, Item{2, "b"}}, 2, 0};
  EXPECT_NO_THROW(check_candidate_set(cs));
  cs.target_position = 3;
  EXPECT_THROW(check_candidate_set(cs), std::invalid_argument);
  cs.target_position = 1;
  cs.items[1].title = "a";
  EXPECT_THROW(check_candidate_set(cs), std::invalid_argument);

  EXPECT_THROW(check_prompt(make_initial_prompt("p0", "   ")), std::invalid_argument);
  PromptCandidate orphan = make_initial_prompt("p1", "text");
  orphan.origin = PromptOrigin::refined;
  EXPECT_THROW(check_prompt(orphan), std::invalid_argument);
}

TEST(Config, DefaultsFollowThePaperSetup) {
  const OptimizerConfig cfg;
  EXPECT_EQ(cfg.n_train, 50);
  EXPECT_EQ(cfg.batch_size, 32);
  EXPECT_EQ(cfg.reasons_per_error, 2);
  EXPECT_EQ(cfg.beam_width, 4);
  EXPECT_EQ(cfg.ucb_epochs, 16);
  EXPECT_EQ(cfg.opt_iterations, 2);
  EXPECT_EQ(cfg.ucb_pool_size, 8);
  EXPECT_EQ(cfg.candidate_size, 20);
  EXPECT_EQ(cfg.k_values, (std::vector<int>{1, 5}));
  EXPECT_EQ(cfg.seeds, (std::vector<std::int64_t>{0, 10, 42, 625, 2023}));
  EXPECT_NO_THROW(validate_config(cfg));
}

TEST(Config, ZeroBeamWidthNamesTheField) {
  OptimizerConfig cfg;
  cfg.beam_width = 0;
  try {
    validate_config(cfg);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "beam_width");
    EXPECT_NE(std::string(e.what()).find("beam_width"), std::string::npos);
  }
}

TEST(Config, InvalidFieldsRejected) {
  auto expect_field = [](OptimizerConfig cfg, const std::string& field) {
    try {
      validate_config(cfg);
      ADD_FAILURE() << "no error for " << field;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.field(), field);
    }
  };
  OptimizerConfig c;
  c.batch_size = 51;
  expect_field(c, "batch_size");
  c = {};
  c.gamma = 0;
  expect_field(c, "gamma");
  c = {};
  c.k_values = {1, 0};
  expect_field(c, "k_values");
  c = {};
  c.seeds.clear();
  expect_field(c, "seeds");
  c = {};
  c.candidate_size = 1;
  expect_field(c, "candidate_size");
}

TEST(Config, TextRoundTrip) {
  RunConfig cfg;
  cfg.optimizer.batch_size = 16;
  cfg.optimizer.k_values = {1, 5, 10};
  cfg.optimizer.seeds = {3, 4};
  cfg.optimizer.include_parents = false;
  cfg.optimizer.reward_mode = RewardMode::mean;
  cfg.mock.initial_quality = 0.25;
  cfg.mock.hallucination_rate = 0.1;
  cfg.remote.model = "some-model";
  EXPECT_EQ(parse_config(to_config_text(cfg)), cfg);
}

TEST(Config, PartialFileKeepsDefaults) {
  const RunConfig cfg = parse_config("[optimizer]\nbeam_width = 2\n\n[mock]\nhallucination_rate = 0\n");
  EXPECT_EQ(cfg.optimizer.beam_width, 2);
  EXPECT_EQ(cfg.optimizer.batch_size, 32);
  EXPECT_EQ(cfg.mock.hallucination_rate, 0.0);
}

TEST(Config, UnknownKeyAndBadValues) {
  EXPECT_THROW(parse_config("[optimizer]\nbeam = 2\n"), ConfigError);
  EXPECT_THROW(parse_config("[optimizer]\nbeam_width = two\n"), ConfigError);
  EXPECT_THROW(parse_config("[optimizer]\njson_mode = maybe\n"), ConfigError);
  EXPECT_THROW(parse_config("[nowhere]\nx = 1\n"), ConfigError);
}

TEST(Config, EnvironmentOverrides) {
  std::map<std::string, std::string> env{{"PO_API_KEY", "sk-test"},
                                         {"PO_API_BASE", "http://localhost:9/v1"},
                                         {"PO_MODEL", "local"},
                                         {"PO_BATCH_SIZE", "8"}};
  RunConfig cfg;
  apply_env_overrides(cfg, [&](const std::string& k) -> std::optional<std::string> {
    auto it = env.find(k);
    if (it == env.end()) return std::nullopt;
    return it->second;
  });
  EXPECT_EQ(cfg.remote.api_key, "sk-test");
  EXPECT_EQ(cfg.remote.api_base, "http://localhost:9/v1");
  EXPECT_EQ(cfg.remote.model, "local");
  EXPECT_EQ(cfg.optimizer.batch_size, 8);
  // The key never lands in a config snapshot.
  EXPECT_EQ(to_config_text(cfg).find("sk-test"), std::string::npos);
}

TEST(Config, MockRangesValidated) {
  RunConfig cfg;
  cfg.mock.hallucination_rate = 1.5;
  EXPECT_THROW(validate_config(cfg), ConfigError);
  cfg = {};
  cfg.mock.prior_low = 0.7;
  EXPECT_THROW(validate_config(cfg), ConfigError);
}
