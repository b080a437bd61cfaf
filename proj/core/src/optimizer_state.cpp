#include <stdexcept>

#include <nlohmann/json.hpp>

#include "promptopt/errors.hpp"
#include "promptopt/optimizer.hpp"

namespace promptopt {

using nlohmann::json;

namespace {

json rank_json(const Rank& r) { return r ? json(*r) : json(nullptr); }
Rank rank_from(const json& j) { return j.is_null() ? Rank{} : Rank{j.get<int>()}; }

json prompt_json(const PromptCandidate& p) {
  return {{"id", p.prompt_id},
          {"text", p.text},
          {"origin", to_string(p.origin)},
          {"parent", p.parent_id ? json(*p.parent_id) : json(nullptr)},
          {"iteration", p.iteration_born},
          {"R", p.reward_sum},
          {"S", p.sessions_evaluated}};
}

PromptCandidate prompt_from(const json& j) {
  PromptCandidate p;
  p.prompt_id = j.at("id").get<std::string>();
  p.text = j.at("text").get<std::string>();
  p.origin = parse_origin(j.at("origin").get<std::string>());
  if (!j.at("parent").is_null()) p.parent_id = j.at("parent").get<std::string>();
  p.iteration_born = j.at("iteration").get<int>();
  p.reward_sum = j.at("R").get<double>();
  p.sessions_evaluated = j.at("S").get<long>();
  return p;
}

json arm_json(const UcbArm& a) {
  return {{"id", a.prompt_id}, {"R", a.reward_sum}, {"S", a.sessions_evaluated}, {"pulls", a.pulls}};
}

UcbArm arm_from(const json& j) {
  return UcbArm{j.at("id").get<std::string>(), j.at("R").get<double>(), j.at("S").get<long>(),
                j.at("pulls").get<int>()};
}

json pull_json(const PullRecord& p) {
  return {{"iteration", p.iteration},
          {"epoch", p.epoch},
          {"prompt_id", p.prompt_id},
          {"sessions", p.session_ids},
          {"batch_mean_reward", p.batch_mean_reward}};
}

PullRecord pull_from(const json& j) {
  return PullRecord{j.at("iteration").get<int>(), j.at("epoch").get<int>(), j.at("prompt_id").get<std::string>(),
                    j.at("sessions").get<std::vector<std::string>>(), j.at("batch_mean_reward").get<double>()};
}

Phase parse_phase(const std::string& s) {
  if (s == "generate") return Phase::generate;
  if (s == "evaluate") return Phase::evaluate;
  if (s == "finished") return Phase::finished;
  throw std::invalid_argument("unknown optimizer phase: " + s);
}

}  // namespace

std::string state_to_json(const OptimizerState& st) {
  json j;
  j["iteration"] = st.iteration;
  j["phase"] = to_string(st.phase);
  j["beam"] = st.beam;
  j["epoch"] = st.epoch;
  j["pending_children"] = st.pending_children;
  j["next_prompt_seq"] = st.next_prompt_seq;
  j["rng"] = st.rng_state;

  json archive = json::array();
  for (const auto& e : st.archive) {
    json evals = json::array();
    for (const auto& ev : e.evaluations) {
      evals.push_back({{"iteration", ev.iteration}, {"R", ev.reward_sum}, {"S", ev.sessions_evaluated},
                       {"pulls", ev.pulls}});
    }
    archive.push_back({{"prompt", prompt_json(e.prompt)}, {"evaluations", evals}});
  }
  j["archive"] = std::move(archive);

  json arms = json::array();
  for (const auto& a : st.arms) arms.push_back(arm_json(a));
  j["arms"] = std::move(arms);

  json pulls = json::array();
  for (const auto& p : st.pulls) pulls.push_back(pull_json(p));
  j["pulls"] = std::move(pulls);

  json history = json::array();
  for (const auto& snap : st.beam_history) {
    json members = json::array();
    for (const auto& m : snap.members) {
      members.push_back({{"id", m.prompt_id}, {"score", m.score}, {"R", m.reward_sum}, {"S", m.sessions_evaluated}});
    }
    history.push_back({{"iteration", snap.iteration}, {"members", members}});
  }
  j["beam_history"] = std::move(history);

  json iterations = json::array();
  for (const auto& it : st.iterations) {
    json members = json::array();
    for (const auto& m : it.members) {
      members.push_back({{"id", m.prompt_id},
                         {"batch", m.batch_session_ids},
                         {"error_cases", m.error_cases},
                         {"reasons", m.reasons},
                         {"refined", m.refined},
                         {"augmented", m.augmented},
                         {"missing_children", m.missing_children}});
    }
    iterations.push_back({{"iteration", it.iteration},
                          {"members", members},
                          {"children", it.children},
                          {"pool_size", it.pool_size},
                          {"evaluated", it.evaluated}});
  }
  j["iterations"] = std::move(iterations);

  json transcripts = json::array();
  for (const auto& t : st.transcripts) {
    transcripts.push_back({{"iteration", t.iteration},
                           {"phase", t.phase},
                           {"prompt_id", t.prompt_id},
                           {"session_id", t.session_id},
                           {"rank", rank_json(t.rank)},
                           {"verdict", to_string(t.verdict)},
                           {"raw", t.raw}});
  }
  j["transcripts"] = std::move(transcripts);
  return j.dump();
}

OptimizerState state_from_json(std::string_view text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error("optimizer checkpoint is not valid JSON");
  OptimizerState st;
  try {
    st.iteration = j.at("iteration").get<int>();
    st.phase = parse_phase(j.at("phase").get<std::string>());
    st.beam = j.at("beam").get<std::vector<std::string>>();
    st.epoch = j.at("epoch").get<int>();
    st.pending_children = j.at("pending_children").get<std::vector<std::string>>();
    st.next_prompt_seq = j.at("next_prompt_seq").get<int>();
    st.rng_state = j.at("rng").get<std::string>();
    for (const auto& e : j.at("archive")) {
      ArchiveEntry entry{prompt_from(e.at("prompt")), {}};
      for (const auto& ev : e.at("evaluations")) {
        entry.evaluations.push_back(EvaluationRecord{ev.at("iteration").get<int>(), ev.at("R").get<double>(),
                                                     ev.at("S").get<long>(), ev.at("pulls").get<int>()});
      }
      st.archive.push_back(std::move(entry));
    }
    for (const auto& a : j.at("arms")) st.arms.push_back(arm_from(a));
    for (const auto& p : j.at("pulls")) st.pulls.push_back(pull_from(p));
    for (const auto& snap : j.at("beam_history")) {
      BeamSnapshot s{snap.at("iteration").get<int>(), {}};
      for (const auto& m : snap.at("members")) {
        s.members.push_back(BeamMember{m.at("id").get<std::string>(), m.at("score").get<double>(),
                                       m.at("R").get<double>(), m.at("S").get<long>()});
      }
      st.beam_history.push_back(std::move(s));
    }
    for (const auto& it : j.at("iterations")) {
      IterationLog log;
      log.iteration = it.at("iteration").get<int>();
      log.children = it.at("children").get<int>();
      log.pool_size = it.at("pool_size").get<int>();
      log.evaluated = it.at("evaluated").get<bool>();
      for (const auto& m : it.at("members")) {
        log.members.push_back(MemberLog{m.at("id").get<std::string>(), m.at("batch").get<std::vector<std::string>>(),
                                        m.at("error_cases").get<int>(), m.at("reasons").get<int>(),
                                        m.at("refined").get<int>(), m.at("augmented").get<int>(),
                                        m.at("missing_children").get<int>()});
      }
      st.iterations.push_back(std::move(log));
    }
    for (const auto& t : j.at("transcripts")) {
      st.transcripts.push_back(Transcript{t.at("iteration").get<int>(), t.at("phase").get<std::string>(),
                                          t.at("prompt_id").get<std::string>(), t.at("session_id").get<std::string>(),
                                          rank_from(t.at("rank")), parse_verdict(t.at("verdict").get<std::string>()),
                                          t.at("raw").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed optimizer checkpoint: ") + e.what());
  }
  return st;
}

std::string archive_jsonl(const OptimizerState& st) {
  std::string out;
  for (const auto& e : st.archive) {
    const auto& p = e.prompt;
    json j = {{"id", p.prompt_id},
              {"parent", p.parent_id ? json(*p.parent_id) : json(nullptr)},
              {"origin", to_string(p.origin)},
              {"iteration", p.iteration_born},
              {"R", p.reward_sum},
              {"S", p.sessions_evaluated}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string pulls_jsonl(const OptimizerState& st) {
  std::string out;
  for (const auto& p : st.pulls) {
    out += pull_json(p).dump();
    out += '\n';
  }
  return out;
}

}  // namespace promptopt
