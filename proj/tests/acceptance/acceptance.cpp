// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "govdec/bench.hpp"
#include "govdec/error.hpp"
#include "support.hpp"

using namespace govdec;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int g_failures = 0;

void report(const char* id, const char* title, const Outcome& o) {
  std::cout << id << " " << (o.pass ? "PASS" : "FAIL") << " " << title;
  if (!o.detail.empty()) std::cout << " (" << o.detail << ")";
  std::cout << std::endl;
  if (!o.pass) ++g_failures;
}

template <typename F>
void criterion(const char* id, const char* title, F&& body) {
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.fail(std::string("exception: ") + e.what());
  }
  report(id, title, o);
}

// ---- AC1 ------------------------------------------------------------------

json random_content(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> keys(1, 4), val(0, 1000000), kind(0, 2);
  json c = json::object();
  const int n = keys(rng);
  for (int k = 0; k < n; ++k) {
    const std::string key = "k" + std::to_string(k);
    switch (kind(rng)) {
      case 0: c[key] = val(rng); break;
      case 1: c[key] = "v" + std::to_string(val(rng)); break;
      default: c[key] = {{"n", val(rng)}, {"s", std::to_string(val(rng))}}; break;
    }
  }
  return c;
}

/// One single-field change to entry `at`.
void mutate(LedgerEntry& e, std::mt19937_64& rng) {
  auto flip = [&](std::string& hex) {
    std::uniform_int_distribution<std::size_t> pos(0, hex.size() - 1);
    const std::size_t p = pos(rng);
    hex[p] = hex[p] == '0' ? '1' : '0';
  };
  std::uniform_int_distribution<int> which(0, 5);
  switch (which(rng)) {
    case 0: flip(e.hash); break;
    case 1: flip(e.prior_hash); break;
    case 2: e.index += 1; break;
    case 3: e.entry_type = e.entry_type == EntryType::System ? EntryType::StepCompleted : EntryType::System; break;
    case 4: {
      // change an existing content value
      std::vector<std::string> keys;
      for (auto it = e.content.begin(); it != e.content.end(); ++it) {
        if (it.key() != "index" && it.key() != "entry_type") keys.push_back(it.key());
      }
      std::uniform_int_distribution<std::size_t> k(0, keys.size() - 1);
      const std::string key = keys[k(rng)];
      e.content[key] = e.content[key].is_string() ? json(e.content[key].get<std::string>() + "x") : json("tampered");
      break;
    }
    default: e.content["injected"] = 1; break;
  }
}

void ac1(Outcome& o) {
  std::mt19937_64 rng(20260101);
  std::uniform_int_distribution<int> size(5, 50);
  const auto t0 = Clock::now();
  int detected = 0, clean_ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Ledger ledger;
    ledger.set_clock(deterministic_clock(support::kClockBase));
    const int n = size(rng);
    for (int i = 0; i < n; ++i) ledger.append(static_cast<EntryType>(i % 7), random_content(rng));
    auto entries = ledger.snapshot();
    if (verify_chain(entries).chain_valid) ++clean_ok;
    std::uniform_int_distribution<std::size_t> pick(0, entries.size() - 1);
    const std::size_t at = pick(rng);
    mutate(entries[at], rng);
    const auto v = verify_chain(entries);
    if (!v.chain_valid && v.first_broken_index && *v.first_broken_index <= at) ++detected;
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "detected " << detected << "/1000, clean valid " << clean_ok << "/1000, " << secs << " s";
  o.detail = d.str();
  if (detected != 1000 || clean_ok != 1000) o.fail(d.str());
  if (secs >= 10.0) o.fail(d.str());
}

// ---- AC2 ------------------------------------------------------------------

void ac2(Outcome& o) {
  const auto a = support::run_fixture("A001", support::scratch("ac2a"));
  const auto b = support::run_fixture("A001", support::scratch("ac2b"));
  const std::string fa = support::read_file(a->ledger_path());
  const std::string fb = support::read_file(b->ledger_path());
  if (fa != fb) o.fail("ledger files differ");
  const json gold = json::parse(support::read_file(support::kRoot / "fixtures" / "gold" / "A001.json"));
  const std::string head = a->ledger().head_hash();
  const std::string file_hash = sha256_hex(fa);
  if (head != gold.at("head_hash").get<std::string>()) o.fail("head hash " + head + " differs from gold");
  if (file_hash != gold.at("ledger_sha256").get<std::string>()) o.fail("ledger file hash differs from gold");
  if (o.pass) o.detail = "head " + head.substr(0, 16);
}

// ---- AC3 ------------------------------------------------------------------

void ac3(Outcome& o) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> len(1, 12), tier(0, 3);
  int violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::optional<TierLock> lock;
    Tier highest = Tier::Auto;  // the domain default
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      const Tier t = static_cast<Tier>(tier(rng));
      highest = std::max(highest, t);
      const auto before = lock ? lock->tier : Tier::Auto;
      lock = apply_tier(lock, t, "p" + std::to_string(i), Tier::Auto, static_cast<std::uint64_t>(i)).lock;
      if (lock->tier < before) ++violations;
    }
    if (lock->tier != highest) ++violations;
  }
  o.detail = std::to_string(violations) + " violations";
  if (violations) o.fail(o.detail);
}

// ---- AC4 ------------------------------------------------------------------

void ac4(Outcome& o) {
  const FlagKind kinds[] = {FlagKind::CdMismatch, FlagKind::VdTension, FlagKind::ConfidenceDrop};
  int violations = 0, cells = 0;
  for (int step = 0; step <= 10; ++step) {
    const double overall = step / 10.0;
    for (int mask = 0; mask < 8; ++mask) {
      std::vector<CoherenceFlag> flags;
      bool critical = false;
      for (int k = 0; k < 3; ++k) {
        if (!(mask & (1 << k))) continue;
        flags.push_back(CoherenceFlag::make(kinds[k], "a", "b", ""));
        critical = critical || kinds[k] != FlagKind::ConfidenceDrop;
      }
      // Feed the grid value in as the base; penalties then act on it.
      MechanicalSignals m;
      m.citation_rate = overall;
      const auto r = compute_overall(m, std::nullopt, flags);
      const bool expected = r.overall >= 0.5 && !critical;
      ++cells;
      if (r.warranted != expected) ++violations;
      // The rule itself, over the grid value with no penalty applied.
      if (flags.empty() && r.warranted != (overall >= 0.5)) ++violations;
    }
  }
  o.detail = std::to_string(cells) + " cells, " + std::to_string(violations) + " violations";
  if (violations) o.fail(o.detail);
}

// ---- AC5 ------------------------------------------------------------------

Actor actor_for(HitlState to) {
  switch (to) {
    case HitlState::Assigned:
    case HitlState::UnderReview:
    case HitlState::Approved:
    case HitlState::Rejected:
      return {"reviewer", Role::Reviewer};
    default:
      return Actor::system();
  }
}

void ac5(Outcome& o) {
  const auto& table = hitl_table();
  const std::set<std::pair<HitlState, HitlState>> legal(table.begin(), table.end());
  int checked = 0, mismatches = 0;
  for (HitlState from : kAllHitlStates) {
    for (HitlState to : kAllHitlStates) {
      ++checked;
      Ledger ledger;
      WorkOrder order;
      order.order_id = "wo";
      order.instance_id = "i";
      order.state = from;
      const bool should = legal.count({from, to}) > 0;
      if (hitl_legal(from, to) != should) ++mismatches;
      const auto before = ledger.size();
      try {
        transition(order, to, actor_for(to), "", &ledger, 0);
        if (!should || ledger.size() != before + 1 || order.state != to) ++mismatches;
      } catch (const IllegalStateTransition&) {
        if (should || ledger.size() != before || order.state != from) ++mismatches;
      }
    }
  }
  o.detail = std::to_string(checked) + " pairs, " + std::to_string(legal.size()) + " legal, " +
             std::to_string(mismatches) + " mismatches";
  if (checked != 81 || mismatches) o.fail(o.detail);
}

// ---- AC6 ------------------------------------------------------------------

json random_payload(Primitive k, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  switch (k) {
    case Primitive::Deliberate:
      return {{"recommended_action", "OVERTURN"}, {"basis_domain", "clinical"}};
    case Primitive::Challenge: {
      const char* cats[] = {"evidence_gap", "authority_pressure", "reasoning_defect", "domain_mismatch"};
      std::uniform_int_distribution<int> c(0, 3);
      return {{"survives", coin(rng)},
              {"vulnerabilities", {{{"description", "v"}, {"severity", "high"}, {"category", cats[c(rng)]}}}}};
    }
    case Primitive::Reflect: {
      const char* t[] = {"continue", "revise", "escalate"};
      std::uniform_int_distribution<int> c(0, 2);
      return {{"trajectory", t[c(rng)]}, {"revision_target", "deliberate_disposition"}};
    }
    default:
      return json::object();
  }
}

void ac6(Outcome& o) {
  const DomainConfig domain = load_domain(support::domain_path("appeal"));
  const WorkflowConfig workflow = load_workflow(support::workflow_path("appeal"));
  const Orchestrator orch(workflow, domain);
  std::mt19937_64 rng(6);
  int overrides = 0, violations = 0, trajectories = 0;
  std::string first;
  auto violate = [&](int trial, const std::string& why) {
    if (!violations++) first = "trajectory " + std::to_string(trial) + ": " + why;
  };
  for (int trial = 0; trial < 200; ++trial) {
    WorkflowSnapshot snap;
    WorkflowEpistemicRecord rec;
    int calls = 0;
    Chooser chooser = [&](const ChooserRequest& r) {
      ++calls;
      // Mostly legal picks, some deliberately illegal ones.
      std::uniform_int_distribution<std::size_t> pick(0, r.legal.size() - 1);
      std::bernoulli_distribution stray(0.1);
      if (stray(rng)) return ChooserReply{"summarize", "stray"};
      return ChooserReply{std::string(to_string(r.legal[pick(rng)])), "random"};
    };
    bool terminated = false;
    for (int guard = 0; guard < 64 && !terminated; ++guard) {
      const StepView* last = snap.steps.empty() ? nullptr : &snap.steps.back();
      const bool must_generate_override = last && last->kind == Primitive::Generate;
      const bool must_survive_override = last && last->kind == Primitive::Challenge && last->payload.value("survives", false);
      const bool must_terminate = last && last->kind == Primitive::Govern;
      const int before = calls;
      const auto d = orch.next_step({&snap, &rec, calls}, chooser);
      if (must_generate_override || must_survive_override || must_terminate) {
        ++overrides;
        if (calls != before) violate(trial, "override consulted the chooser");
        if (must_generate_override && (d.terminate || d.chosen != Primitive::Challenge)) {
          violate(trial, "generate not followed by challenge");
        }
        if (must_survive_override && (d.terminate || d.chosen != Primitive::Govern)) {
          violate(trial, "survived challenge not followed by govern");
        }
        if (must_terminate && !d.terminate) violate(trial, "govern not followed by termination");
      }
      if (d.terminate) {
        terminated = true;
        break;
      }
      StepView v;
      v.kind = d.chosen;
      v.step_name = d.step_name;
      v.params = d.params;
      v.payload = random_payload(d.chosen, rng);
      snap.steps.push_back(v);
    }
    ++trajectories;
    const int max_steps = workflow.constraints.max_steps;
    std::string shape;
    for (const auto& s : snap.steps) shape += std::string(to_string(s.kind)) + " ";
    if (!terminated) violate(trial, "did not terminate: " + shape);
    else if (snap.steps.empty() || snap.steps.back().kind != Primitive::Govern) violate(trial, "did not end with govern: " + shape);
    else if (static_cast<int>(snap.steps.size()) > max_steps) violate(trial, "exceeded max_steps: " + shape);
  }
  o.detail = std::to_string(trajectories) + " trajectories, " + std::to_string(overrides) + " overrides, " +
             std::to_string(violations) + " violations";
  if (violations) o.fail(o.detail + "; first " + first);
}

// ---- AC7 ------------------------------------------------------------------

void ac7(Outcome& o) {
  std::ostringstream d;
  auto timed = [&](const std::string& id) {
    const auto t0 = Clock::now();
    auto inst = support::run_fixture(id, support::scratch("ac7-" + id));
    const double s = seconds_since(t0);
    if (s >= 5.0) o.fail(id + " took " + std::to_string(s) + " s");
    d << id << " " << inst->steps().size() << " steps " << s << " s; ";
    return inst;
  };
  auto a = timed("A001");
  if (a->steps().size() != 13) o.fail("A001 ran " + std::to_string(a->steps().size()) + " steps");
  if (!a->determination() || a->determination()->disposition != "OVERTURN" ||
      a->determination()->tier_applied != Tier::SpotCheck) {
    o.fail("A001 did not end OVERTURN/SPOT_CHECK");
  }

  auto g = timed("G005");
  const auto gs = g->steps();
  int interleaves = 0;
  for (std::size_t i = 0; i + 1 < gs.size(); ++i) {
    interleaves += gs[i].kind == Primitive::Reflect && gs[i + 1].kind == Primitive::Retrieve;
  }
  if (interleaves != 3) o.fail("G005 has " + std::to_string(interleaves) + " reflect-retrieve interleaves");
  if (!g->determination() || g->determination()->disposition != "OVERTURN" ||
      g->determination()->tier_applied != Tier::SpotCheck) {
    o.fail("G005 did not end OVERTURN/SPOT_CHECK");
  }

  auto b = timed("B001");
  int challenges = 0;
  for (const auto& s : b->steps()) challenges += s.kind == Primitive::Challenge;
  if (challenges != 2) o.fail("B001 ran " + std::to_string(challenges) + " challenge cycles");
  if (!b->determination() || b->determination()->tier_applied != Tier::Gate) o.fail("B001 did not end GATE");
  if (o.pass) o.detail = d.str();
}

// ---- AC8 ------------------------------------------------------------------

void ac8(Outcome& o) {
  const auto manifest = BenchManifest::load(support::kRoot / "fixtures" / "bench" / "manifest.json");
  const auto cc = run_bench_scripted(manifest, support::scratch("ac8"));
  const auto react = run_bench_baseline(manifest, "react");
  const auto ps = run_bench_baseline(manifest, "plan_and_solve");
  std::ostringstream d;
  d << "CC " << cc.correct << "/" << cc.total << " silent " << cc.silent_errors << " SPOT_CHECK " << cc.spot_check
    << "/" << cc.total << "; ReAct " << react.correct << "/" << react.total << " silent " << react.silent_errors
    << "; P&S " << ps.correct << "/" << ps.total << " silent " << ps.silent_errors;
  o.detail = d.str();
  if (cc.total != 11 || cc.correct != 10 || cc.silent_errors != 0 || cc.spot_check != 5) o.fail(d.str());
  if (react.correct != 6 || react.silent_errors != 5) o.fail(d.str());
  if (ps.correct != 5 || ps.silent_errors != 6) o.fail(d.str());
}

// ---- AC9 ------------------------------------------------------------------

void ac9(Outcome& o) {
  auto held = support::run_fixture("G004", support::scratch("ac9a"));
  auto clean = support::run_fixture("G004_clean", support::scratch("ac9b"));
  const auto th = held->determination() ? held->determination()->tier_applied : Tier::Auto;
  const auto tc = clean->determination() ? clean->determination()->tier_applied : Tier::Hold;
  o.detail = "with pattern " + std::string(to_string(th)) + ", without " + std::string(to_string(tc));
  if (th != Tier::Hold || tc >= Tier::Hold) o.fail(o.detail);
  bool rule_a = false;
  if (const auto det = held->determination()) {
    for (const auto& r : det->rules_fired) rule_a = rule_a || r == "a";
  }
  if (!rule_a) o.fail("rule a did not fire on G004");
}

// ---- AC10 -----------------------------------------------------------------

/// A001's script with deliberate_1 failing to parse twice before a reply at
/// the given confidence.
ScriptedBackend twice_failed_deliberate(double confidence) {
  json j = json::parse(support::read_file(support::kRoot / "fixtures" / "scripts" / "A001.json"));
  json good = json::parse(j["steps"]["deliberate_1"][0].get<std::string>());
  good["confidence"] = confidence;
  j["steps"]["deliberate_1"] = {"I think OVERTURN is right.", R"({"recommended_action": "OVERTURN",)", good.dump()};
  ScriptedBackend b;
  b.add(TrajectoryScript::from_json(j));
  return b;
}

void ac10(Outcome& o) {
  std::ostringstream d;
  for (const double conf : {0.9, 0.6}) {
    ScriptedBackend backend = twice_failed_deliberate(conf);
    auto inst = support::open_instance("A001", support::scratch("ac10"), backend);
    inst->run();
    const StepRecord* del = nullptr;
    const auto steps = inst->steps();
    for (const auto& s : steps) {
      if (s.step_name == "deliberate_1") del = &s;
    }
    if (!del || del->attempts.size() != 3 || del->attempts[0].ok || del->attempts[1].ok || !del->attempts[2].ok) {
      o.fail("deliberate_1 did not record two failed attempts then a success");
      continue;
    }
    const auto lock = inst->tier_lock();
    const bool breach = lock.rationale.find("below floor") != std::string::npos;
    const Tier t = inst->determination() ? inst->determination()->tier_applied : Tier::Auto;
    d << "final " << conf << " -> " << to_string(t) << (breach ? " (floor breach)" : "") << "; ";
    if (conf >= 0.7 && (breach || t != Tier::SpotCheck)) o.fail("escalated above the floor: " + d.str());
    if (conf < 0.7 && (!breach || t < Tier::Gate)) o.fail("no escalation below the floor: " + d.str());
  }
  if (o.pass) o.detail = d.str();
}

// ---- AC11 -----------------------------------------------------------------

void ac11(Outcome& o) {
  // Reference run: how long is the ledger up to suspension, and where does
  // it end?
  const auto ref_dir = support::scratch("ac11-ref");
  std::string ref_head;
  std::size_t ref_len = 0;
  {
    auto ref = support::run_fixture("D001", ref_dir);
    if (ref->status() != InstanceStatus::Suspended) {
      o.fail("D001 reference run did not suspend");
      return;
    }
    ref_head = ref->ledger().head_hash();
    ref_len = ref->ledger_entries().size();
  }

  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> pick(0, ref_len - 1);
  int consistent = 0;
  std::ostringstream bad;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t kill_at = pick(rng);
    const auto dir = support::scratch("ac11");
    std::cout.flush();
    const pid_t pid = ::fork();
    if (pid == 0) {
      auto opts = support::deterministic_options();
      opts.on_append = [kill_at](const LedgerEntry& e) {
        if (e.index == kill_at) ::_exit(0);
      };
      try {
        auto inst = support::open_instance("D001", dir, support::fixture_backend(), opts);
        inst->run();
      } catch (...) {
        ::_exit(3);
      }
      ::_exit(2);  // never reached the kill point
    }
    int status = 0;
    ::waitpid(pid, &status, 0);
    std::string why;
    auto check = [&why](bool cond, const char* what) {
      if (!cond && why.empty()) why = what;
    };
    check(WIFEXITED(status) && WEXITSTATUS(status) == 0, "child did not stop at the kill point");

    auto inst = support::open_instance("D001", dir, support::fixture_backend());
    const auto entries = inst->ledger_entries();
    check(entries.size() == kill_at + 1, "ledger length after restart");
    check(inst->ledger().verify().chain_valid, "chain invalid after restart");
    // The state report must match the ledger tail.
    int step_entries = 0;
    for (const auto& e : entries) step_entries += e.entry_type == EntryType::StepCompleted;
    check(static_cast<int>(inst->steps().size()) == step_entries, "step count disagrees with the ledger");
    if (!inst->steps().empty()) check(inst->steps().back().ledger_index < entries.size(), "step beyond the ledger");

    inst->run();
    check(inst->status() == InstanceStatus::Suspended, "continued run did not suspend");
    check(inst->ledger().head_hash() == ref_head, "continued head differs from the reference");
    try {
      inst->accept({"rev", Role::Reviewer});
      inst->approve({"rev", Role::Reviewer}, "resumed after restart");
      inst->run();
      check(inst->status() == InstanceStatus::Completed, "approval did not complete");
      check(inst->ledger().verify().chain_valid, "chain invalid after approval");
    } catch (const std::exception& e) {
      check(false, "review failed");
    }
    if (why.empty()) {
      ++consistent;
    } else {
      bad << kill_at << " (" << why << ") ";
    }
  }
  o.detail = std::to_string(consistent) + "/20 kill points consistent";
  if (consistent != 20) o.fail(o.detail + "; failing indices " + bad.str());
}

}  // namespace

int main() {
  criterion("AC1", "ledger tamper detection", ac1);
  criterion("AC2", "deterministic replay", ac2);
  criterion("AC3", "governance monotonicity", ac3);
  criterion("AC4", "warranted rule exhaustion", ac4);
  criterion("AC5", "HITL legality", ac5);
  criterion("AC6", "orchestrator overrides", ac6);
  criterion("AC7", "trajectory replay", ac7);
  criterion("AC8", "benchmark metrics", ac8);
  criterion("AC9", "guardrail to governance coupling", ac9);
  criterion("AC10", "quality-gate attempt semantics", ac10);
  criterion("AC11", "crash durability", ac11);
  std::cout << (g_failures ? std::to_string(g_failures) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return g_failures ? 1 : 0;
}
