#include "govdec/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>

#include "govdec/error.hpp"
#include "govdec/store.hpp"

namespace govdec {

namespace {

constexpr const char* kOrchestrator = "orchestrator";

double number_from(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return std::strtod(v.get<std::string>().c_str(), nullptr);
  return 0.0;
}

std::int64_t system_epoch() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

std::vector<AttemptRecord> attempts_from(const json& arr) {
  std::vector<AttemptRecord> out;
  for (const auto& a : arr) {
    AttemptRecord r;
    r.attempt = a.value("attempt", 1);
    r.ok = a.value("ok", false);
    if (a.contains("confidence")) r.confidence = number_from(a["confidence"]);
    if (a.contains("salvage_stage")) r.salvage_stage = a["salvage_stage"].get<int>();
    r.diagnostics = a.value("diagnostics", std::string());
    out.push_back(std::move(r));
  }
  return out;
}

json model_json(const ModelChoice& m) {
  return {{"alias", m.alias}, {"model_id", m.model_id}, {"token_budget", m.token_budget}, {"temperature", m.temperature}};
}

/// "deliberate" or "deliberate_2" -> deliberate.
std::optional<Primitive> directive_kind(const std::string& step) {
  if (auto p = parse_primitive(step)) return p;
  const auto us = step.rfind('_');
  if (us == std::string::npos) return std::nullopt;
  return parse_primitive(step.substr(0, us));
}

}  // namespace

std::string_view to_string(InstanceStatus s) noexcept {
  switch (s) {
    case InstanceStatus::Running: return "running";
    case InstanceStatus::Suspended: return "suspended";
    case InstanceStatus::Completed: return "completed";
    case InstanceStatus::Terminated: return "terminated";
    case InstanceStatus::Halted: return "halted";
  }
  return "running";
}

Ledger::Clock deterministic_clock(std::int64_t base) {
  return [base](std::uint64_t index) { return iso8601_utc(base + static_cast<std::int64_t>(index)); };
}

Instance::Instance(InstanceSpec spec, std::filesystem::path dir, Backend& backend, ModelPolicy policy,
                   RuntimeOptions options)
    : spec_(std::move(spec)),
      dir_(std::move(dir)),
      backend_(backend),
      policy_(std::move(policy)),
      opts_(std::move(options)),
      orchestrator_(spec_.workflow, spec_.domain) {
  redaction_.scope = spec_.instance_id;
  case_view_ = redact_case(spec_.case_input.prompt_view, spec_.domain.pii, redaction_);

  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw StorageError("cannot create " + dir_.string() + ": " + ec.message());
  ledger_ = Ledger::open(ledger_path());
  if (opts_.ledger_clock) ledger_->set_clock(opts_.ledger_clock);

  const auto existing = ledger_->snapshot();
  if (!existing.empty()) {
    const auto check = verify_chain(existing);
    if (!check.chain_valid) {
      throw StorageError("ledger for " + spec_.instance_id + " is broken at index " +
                         std::to_string(check.first_broken_index.value_or(0)));
    }
    replay(existing);
  }
  ledger_->set_append_hook([this](const LedgerEntry& e) {
    if (opts_.store) opts_.store->index_entry(spec_.instance_id, e);
    if (opts_.on_append) opts_.on_append(e);
  });
  if (opts_.store) {
    for (const auto& e : existing) opts_.store->index_entry(spec_.instance_id, e);
  }
  publish();
}

Instance::~Instance() {
  if (worker_.valid()) worker_.wait();
}

// ---- helpers --------------------------------------------------------------

std::int64_t Instance::now() const { return opts_.now ? opts_.now() : system_epoch(); }

// Real-valued signals and optional fields are normalised here so the ledger
// itself can stay strict.
LedgerEntry Instance::append(EntryType type, json content) {
  return ledger_->append(type, to_canonical_value(content));
}

std::vector<StepView> Instance::views() const {
  std::vector<StepView> out;
  out.reserve(steps_.size());
  for (const auto& s : steps_) {
    StepView v;
    v.step_name = s.step_name;
    v.kind = s.kind;
    v.params = s.params;
    if (s.output) {
      v.payload = s.output->payload;
      v.confidence = s.output->confidence;
    }
    out.push_back(std::move(v));
  }
  return out;
}

WorkflowSnapshot Instance::snapshot() const {
  WorkflowSnapshot snap;
  snap.case_id = spec_.case_input.case_id;
  snap.case_view = case_view_;
  // Documents come from the redacted view so prompts never see raw PII.
  if (auto docs = case_view_.find("documents"); docs != case_view_.end() && docs->is_object()) {
    for (const auto& [name, text] : docs->items()) {
      if (text.is_string()) snap.documents[name] = text.get<std::string>();
    }
  }
  snap.steps = views();
  snap.routing_log = routing_log_;
  snap.reviewer_note = reviewer_note_;
  return snap;
}

std::vector<StepOutputRef> Instance::output_refs() const {
  std::vector<StepOutputRef> out;
  for (const auto& s : steps_) out.push_back({s.step_name, s.output ? &*s.output : nullptr});
  return out;
}

const StepRecord* Instance::last_step() const { return steps_.empty() ? nullptr : &steps_.back(); }

std::vector<WorkOrder*> Instance::current_group() {
  std::vector<WorkOrder*> out;
  for (auto& o : orders_) {
    if (o.group_id == current_group_) out.push_back(&o);
  }
  return out;
}

std::vector<const WorkOrder*> Instance::current_group() const {
  std::vector<const WorkOrder*> out;
  for (const auto& o : orders_) {
    if (o.group_id == current_group_) out.push_back(&o);
  }
  return out;
}

GroupOutcome Instance::current_outcome() const {
  std::vector<WorkOrder> group;
  for (const auto* o : current_group()) group.push_back(*o);
  if (group.empty()) return GroupOutcome::Pending;
  return group_outcome(group, spec_.domain.governance.quorum);
}

std::size_t Instance::expected_orders(const std::string& govern_step) const {
  auto it = determinations_.find(govern_step);
  if (it == determinations_.end() || !it->second.work_order) return 0;
  const auto& w = *it->second.work_order;
  return w.mode == DelegationMode::Parallel ? static_cast<std::size_t>(std::max(1, w.reviewers)) : 1;
}

bool Instance::dispatch_complete(const std::string& govern_step) const {
  const std::string group = spec_.instance_id + "-" + govern_step;
  std::size_t n = 0;
  for (const auto& o : orders_) {
    if (o.group_id != group) continue;
    ++n;
    if (o.state == HitlState::Suspended) return false;
  }
  return n >= expected_orders(govern_step);
}

void Instance::publish() {
  json s = {{"instance_id", spec_.instance_id},
            {"case_id", spec_.case_input.case_id},
            {"workflow_id", spec_.workflow.workflow_id},
            {"domain_id", spec_.domain.domain_id},
            {"mode", std::string(to_string(spec_.workflow.mode))},
            {"status", std::string(to_string(status_))},
            {"steps", steps_.size()},
            {"ledger_size", ledger_->size()},
            {"chooser_calls", chooser_calls_}};
  s["tier"] = tier_lock_ ? json(std::string(to_string(tier_lock_->tier))) : json(nullptr);
  const StepRecord* last = last_step();
  if (last && last->kind == Primitive::Govern && determinations_.count(last->step_name)) {
    const auto& d = determinations_.at(last->step_name);
    s["disposition"] = d.disposition;
    s["tier"] = std::string(to_string(d.tier_applied));
  } else if (!determinations_.empty()) {
    s["disposition"] = determinations_.rbegin()->second.disposition;
  } else {
    s["disposition"] = nullptr;
  }
  int open = 0;
  for (const auto* o : current_group()) open += sla_armed(o->state) ? 1 : 0;
  s["open_orders"] = open;
  {
    std::lock_guard lock(cache_mu_);
    summary_cache_ = s;
  }
  if (opts_.store) opts_.store->put("instances", spec_.instance_id, s);
}

// ---- replay ---------------------------------------------------------------

void Instance::replay(const std::vector<LedgerEntry>& entries) {
  for (const auto& e : entries) {
    const json& c = e.content;
    switch (e.entry_type) {
      case EntryType::System: {
        const std::string ev = c.value("event", std::string());
        if (ev == "instance_started") {
          if (c.value("case_id", std::string()) != spec_.case_input.case_id ||
              c.value("case_digest", std::string()) != sha256_hex(canonical_json(spec_.case_input.fields))) {
            throw StorageError("ledger for " + spec_.instance_id + " belongs to a different case");
          }
          started_ = true;
          findings_ = scan(case_view_, spec_.domain.guardrails);
        } else if (ev == "suspended") {
          settled_.insert(c.value("govern_step", std::string()));
          status_ = InstanceStatus::Suspended;
        } else if (ev == "completed") {
          if (c.contains("govern_step")) settled_.insert(c["govern_step"].get<std::string>());
          status_ = InstanceStatus::Completed;
        } else if (ev == "terminated") {
          status_ = InstanceStatus::Terminated;
        } else if (ev == "halted") {
          halted_ = true;
          status_ = InstanceStatus::Halted;
        } else if (ev == "released") {
          halted_ = false;
          status_ = InstanceStatus::Running;
        } else if (ev == "resumed") {
          resumed_.insert(c.value("govern_step", std::string()));
          status_ = InstanceStatus::Running;
          if (c.value("outcome", std::string()) == "rejected") {
            directive_step_ = c.value("resume_step", std::string());
            reviewer_note_ = c.value("note", std::string());
          }
        }
        break;
      }
      case EntryType::GuardrailEvent:
        if (c.value("severity", std::string()) == "critical") {
          record_.critical_guardrail_events.push_back(c.value("pattern_id", std::string()));
        }
        break;
      case EntryType::OrchestratorDecision: {
        OrchestratorDecision d;
        d.terminate = c.value("terminate", false);
        d.chosen = primitive_from_string(c.at("chosen").get<std::string>());
        d.step_name = c.at("step_name").get<std::string>();
        d.reasoning = c.value("reasoning", std::string());
        d.decided_by = parse_decided_by(c.value("decided_by", std::string("model"))).value_or(DecidedBy::Model);
        for (const auto& p : c.value("legal_set", json::array())) d.legal_set.push_back(primitive_from_string(p.get<std::string>()));
        d.model_calls = c.value("model_calls", 0);
        d.params = orchestrator_.params_for(d.chosen, d.step_name, views());
        d.ledger_index = e.index;
        chooser_calls_ += d.model_calls;
        if (d.decided_by == DecidedBy::OverrideReviewerDirective) directive_step_.reset();
        routing_log_.push_back(d.step_name + ": " + std::string(to_string(d.decided_by)));
        pending_ = std::move(d);
        pending_index_ = e.index;
        break;
      }
      case EntryType::StepCompleted:
        replay_step(c, e.index);
        break;
      case EntryType::GovernanceAction: {
        const std::string ev = c.value("event", std::string());
        if (ev == "determination") {
          auto [d, app] = compute_determination();
          determinations_[c.value("govern_step", std::string())] = d;
          tier_lock_ = app.lock;
          tier_lock_->locked_at = c.at("tier_lock").value("locked_at", app.lock.locked_at);
        } else if (ev == "tier_raise") {
          TierLock l;
          l.tier = parse_tier(c.at("tier_lock").at("tier").get<std::string>()).value_or(Tier::Gate);
          l.locked_at = c.at("tier_lock").value("locked_at", std::uint64_t{0});
          l.rationale = c.at("tier_lock").value("rationale", std::string());
          tier_lock_ = l;
        }
        break;
      }
      case EntryType::WorkOrder: {
        WorkOrder o = WorkOrder::from_json(c);
        current_group_ = o.group_id;
        orders_.push_back(std::move(o));
        break;
      }
      case EntryType::HitlTransition: {
        const std::string id = c.at("order_id").get<std::string>();
        auto it = std::find_if(orders_.begin(), orders_.end(), [&](const WorkOrder& o) { return o.order_id == id; });
        if (it == orders_.end()) throw StorageError("transition for unknown order " + id);
        it->state = parse_hitl_state(c.at("to").get<std::string>()).value();
        const std::string note = c.value("note", std::string());
        if (!note.empty()) it->notes.push_back(note);
        // The recorded deadline is authoritative; the clock may have moved.
        if (c.contains("sla_deadline_epoch") && c["sla_deadline_epoch"].is_number()) {
          it->sla_deadline = c["sla_deadline_epoch"].get<std::int64_t>();
        } else {
          it->sla_deadline.reset();
        }
        if (it->state == HitlState::Assigned) it->assignee = c.value("actor", std::string());
        if (c.contains("resume_step") && c["resume_step"].is_string()) {
          it->directive = ResumeDirective{c["resume_step"].get<std::string>()};
        }
        break;
      }
    }
  }
}

void Instance::replay_step(const json& c, std::uint64_t index) {
  if (!pending_ || pending_->step_name != c.at("step_name").get<std::string>()) {
    throw StorageError("step_completed without a matching decision at index " + std::to_string(index));
  }
  StepRecord rec;
  rec.decision = *pending_;
  rec.decision_index = pending_index_;
  rec.ledger_index = index;
  rec.kind = pending_->chosen;
  rec.step_name = pending_->step_name;
  rec.params = resolve_params(rec.kind, spec_.domain, pending_->params);
  rec.attempts = attempts_from(c.value("attempts", json::array()));
  rec.model = policy_.resolve(rec.kind);
  rec.failed = c.value("status", std::string("ok")) != "ok";
  if (!rec.failed) {
    CognitiveOutput out = parse_output(rec.kind, c.at("raw_text").get<std::string>(), &spec_.domain);
    rec.output = std::move(out);
  }
  std::optional<GuardVerdict> pending_guard;
  if (rec.kind == Primitive::Reflect) pending_guard = orchestrator_.pending_guard(views());
  if (pending_guard) rec.guard = rec.output ? reconcile_guard(*pending_guard, rec.output->payload) : *pending_guard;
  assess(rec);
  record_.add(rec.state, rec.kind == Primitive::Reflect
                             ? std::optional<ReflectMode>(pending_guard ? ReflectMode::PostChallenge : ReflectMode::GapFilling)
                             : std::nullopt);
  attempts_.push_back(StepAttempts{rec.step_name, rec.kind, rec.attempts});
  steps_.push_back(std::move(rec));
  pending_.reset();
}

// ---- state machine --------------------------------------------------------

Instance::Action Instance::next_action() const {
  if (!started_) return Action::Start;
  if (status_ == InstanceStatus::Completed || status_ == InstanceStatus::Terminated || halted_) return Action::None;
  if (pending_) return Action::Execute;
  if (directive_step_) return Action::Directive;
  const StepRecord* last = last_step();
  if (last && last->kind == Primitive::Govern) {
    const std::string& g = last->step_name;
    if (!determinations_.count(g)) return Action::Determine;
    if (!dispatch_complete(g)) return Action::Dispatch;
    if (!settled_.count(g)) return Action::Settle;
    if (current_group_ != spec_.instance_id + "-" + g) return Action::None;
    switch (current_outcome()) {
      case GroupOutcome::Approved: return Action::ApplyApproved;
      case GroupOutcome::Rejected: return Action::ApplyRejected;
      default: return Action::None;
    }
  }
  return Action::Decide;
}

InstanceStatus Instance::run() {
  std::lock_guard lock(mu_);
  return run_locked();
}

InstanceStatus Instance::run_locked() {
  if (status_ == InstanceStatus::Completed || status_ == InstanceStatus::Terminated || halted_) return status_;
  const Action a = next_action();
  if (a == Action::None) return status_;

  model_ = std::make_unique<kernel::WorkflowModel>();
  model_->add_component(kOrchestrator);
  const StepRecord* last = last_step();
  const bool post_govern = a == Action::Determine || a == Action::Dispatch || a == Action::Settle ||
                           a == Action::ApplyApproved || a == Action::ApplyRejected;
  if (post_govern && last) {
    model_->add_component(last->step_name, Primitive::Govern);
    model_->couple(last->step_name, kOrchestrator);
    if (status_ == InstanceStatus::Suspended) {
      // The suspended govern component awaits the review result.
      model_->restore_phase(last->step_name, kernel::Phase::AwaitingResult);
      model_->set_pending_work_order(true);
      model_->inject(last->step_name, ResumeSignal{});
    } else {
      model_->start(last->step_name);
    }
  } else if (a == Action::Execute) {
    model_->add_component(pending_->step_name, pending_->chosen);
    model_->couple(pending_->step_name, kOrchestrator);
    model_->start(pending_->step_name);
  } else {
    model_->start(kOrchestrator);
  }

  kernel::run_to_quiescence(
      *model_,
      [this](const kernel::StepComponent& c, std::optional<kernel::InjectedEvent> ev) {
        if (c.step_id == kOrchestrator) return execute_orchestrator();
        return execute_step(c, std::move(ev));
      },
      opts_.step_cap, opts_.stall_timeout);
  if (status_ == InstanceStatus::Running && next_action() == Action::None && !halted_) {
    // Nothing left to do and nothing pending: a workflow that never governed.
    status_ = InstanceStatus::Completed;
  }
  publish();
  return status_;
}

kernel::Transition Instance::execute_orchestrator() {
  while (true) {
    switch (next_action()) {
      case Action::Start:
        do_start();
        continue;
      case Action::Decide:
      case Action::Directive: {
        do_decide(next_action() == Action::Directive);
        if (!pending_) return kernel::Transition::terminate();
        const std::string name = pending_->step_name;
        if (!model_->has_component(name)) {
          model_->add_component(name, pending_->chosen);
          model_->couple(name, kOrchestrator);
        }
        return kernel::Transition::route(name);
      }
      case Action::Execute: {
        const std::string name = pending_->step_name;
        if (!model_->has_component(name)) {
          model_->add_component(name, pending_->chosen);
          model_->couple(name, kOrchestrator);
        }
        return kernel::Transition::route(name);
      }
      case Action::None:
        return kernel::Transition::terminate();
      default: {
        const std::string g = last_step()->step_name;
        if (!model_->has_component(g)) {
          model_->add_component(g, Primitive::Govern);
          model_->couple(g, kOrchestrator);
        }
        return kernel::Transition::route(g);
      }
    }
  }
}

kernel::Transition Instance::execute_step(const kernel::StepComponent& c, std::optional<kernel::InjectedEvent> ev) {
  if (ev) {
    if (ev->payload.type() == typeid(ResumeSignal)) return after_govern(std::nullopt);
    auto delivery = std::any_cast<StepDelivery>(std::move(ev->payload));
    if (worker_.valid()) worker_.wait();
    if (delivery.error) std::rethrow_exception(delivery.error);
    const OrchestratorDecision d = *pending_;
    const json params = resolve_params(d.chosen, spec_.domain, d.params);
    complete_step(d, delivery.result, params);
    publish();
    if (d.chosen == Primitive::Govern) return after_govern(d.step_name);
    return kernel::Transition::route(kOrchestrator, d.step_name);
  }

  if (!pending_ || pending_->step_name != c.step_id) return after_govern(std::nullopt);

  if (opts_.kill_switches) {
    const KillCheck k = opts_.kill_switches->check(spec_.domain.domain_id, spec_.instance_id);
    if (k.halted) {
      append(EntryType::System, {{"event", "halted"},
                                 {"scope", std::string(to_string(k.by->scope))},
                                 {"target", k.by->target},
                                 {"reason", k.by->reason},
                                 {"step_name", c.step_id}});
      halted_ = true;
      status_ = InstanceStatus::Halted;
      publish();
      return kernel::Transition::terminate();
    }
  }

  const OrchestratorDecision d = *pending_;
  const json params = resolve_params(d.chosen, spec_.domain, d.params);
  const PromptBundle bundle = render_prompt(d.chosen, spec_.domain, snapshot(), params);
  auto launch = [this, kind = d.chosen, name = d.step_name, bundle]() {
    worker_ = std::async(std::launch::async, [this, kind, name, bundle]() {
      StepDelivery out;
      try {
        out.result = execute_attempts(kind, bundle, policy_, backend_, spec_.case_input.case_id, name, &spec_.domain);
      } catch (...) {
        out.error = std::current_exception();
      }
      model_->inject(name, std::move(out));
    });
  };
  return kernel::Transition::await(launch);
}

kernel::Transition Instance::after_govern(std::optional<std::string> completed) {
  while (true) {
    const Action a = next_action();
    if (a == Action::Determine) {
      do_determine();
    } else if (a == Action::Dispatch) {
      do_dispatch();
    } else if (a == Action::Settle) {
      do_settle();
    } else if (a == Action::ApplyApproved) {
      do_apply_approved();
    } else if (a == Action::ApplyRejected) {
      do_apply_rejected();
    } else {
      break;
    }
    publish();
  }
  if (status_ == InstanceStatus::Suspended) return kernel::Transition::suspend(std::move(completed));
  if (status_ == InstanceStatus::Running && directive_step_) {
    return kernel::Transition::route(kOrchestrator, std::move(completed));
  }
  return kernel::Transition::terminate(std::move(completed));
}

// ---- actions --------------------------------------------------------------

void Instance::do_start() {
  findings_ = scan(case_view_, spec_.domain.guardrails);
  append(EntryType::System, {{"event", "instance_started"},
                             {"instance_id", spec_.instance_id},
                             {"case_id", spec_.case_input.case_id},
                             {"workflow_id", spec_.workflow.workflow_id},
                             {"domain_id", spec_.domain.domain_id},
                             {"mode", std::string(to_string(spec_.workflow.mode))},
                             {"case_digest", sha256_hex(canonical_json(spec_.case_input.fields))},
                             {"redactions", redaction_.size()}});
  for (const auto& f : findings_) {
    append(EntryType::GuardrailEvent, f.to_json());
    if (f.severity == Severity::Critical) record_.critical_guardrail_events.push_back(f.pattern_id);
  }
  started_ = true;
  publish();
}

void Instance::do_decide(bool directive) {
  const std::vector<StepView> v = views();
  const StepRecord* last = last_step();
  OrchestratorDecision d;
  if (directive) {
    const auto kind = directive_kind(*directive_step_).value_or(Primitive::Deliberate);
    d = orchestrator_.forced(kind, DecidedBy::OverrideReviewerDirective,
                             "reviewer sent the case back to " + std::string(to_string(kind)) +
                                 (reviewer_note_ ? ": " + *reviewer_note_ : std::string()),
                             v);
  } else if (last && last->failed && last->kind != Primitive::Govern) {
    d = orchestrator_.forced(Primitive::Govern, DecidedBy::OverrideStepFailure,
                             last->step_name + " failed after " + std::to_string(last->attempts.size()) + " attempts",
                             v);
  } else {
    WorkflowSnapshot snap = snapshot();
    OrchestratorInput in{&snap, &record_, chooser_calls_};
    d = orchestrator_.next_step(in, make_chooser(backend_, policy_, spec_.case_input.case_id));
    if (d.terminate) {
      append(EntryType::System, {{"event", "completed"}, {"reason", d.reasoning}});
      status_ = InstanceStatus::Completed;
      return;
    }
  }
  record_decision(std::move(d));
}

void Instance::record_decision(OrchestratorDecision d) {
  const LedgerEntry e = append(EntryType::OrchestratorDecision, d.to_json());
  d.ledger_index = e.index;
  chooser_calls_ += d.model_calls;
  if (d.decided_by == DecidedBy::OverrideReviewerDirective) directive_step_.reset();
  routing_log_.push_back(d.step_name + ": " + std::string(to_string(d.decided_by)));
  pending_index_ = e.index;
  pending_ = std::move(d);
}

void Instance::assess(StepRecord& rec) const {
  if (!rec.output) {
    rec.state = StepEpistemicState{};
    rec.state.step_id = rec.step_name;
    rec.state.kind = rec.kind;
    rec.state.mechanical.notes.push_back("step failed: no parseable output");
    return;
  }
  auto refs = output_refs();
  refs.push_back({rec.step_name, &*rec.output});
  rec.state = assess_step(record_, rec.step_name, *rec.output, rec.params, refs, &spec_.domain);
}

StepRecord Instance::complete_step(const OrchestratorDecision& d, const ExecutionResult& r, const json& params) {
  StepRecord rec;
  rec.decision = d;
  rec.decision_index = pending_index_;
  rec.kind = d.chosen;
  rec.step_name = d.step_name;
  rec.params = params;
  rec.attempts = r.attempts;
  rec.model = r.model;
  rec.output = r.output;
  rec.failed = !r.output;

  std::optional<GuardVerdict> guard;
  if (rec.kind == Primitive::Reflect) guard = orchestrator_.pending_guard(views());
  if (guard) rec.guard = rec.output ? reconcile_guard(*guard, rec.output->payload) : *guard;
  assess(rec);

  json attempts = json::array();
  for (const auto& a : rec.attempts) attempts.push_back(a.to_json());
  json content = {{"step_name", rec.step_name},
                  {"kind", std::string(to_string(rec.kind))},
                  {"status", rec.failed ? "failed" : "ok"},
                  {"decision_index", rec.decision_index},
                  {"params", rec.params},
                  {"attempts", attempts},
                  {"model", model_json(rec.model)},
                  {"epistemic", rec.state.to_json()}};
  if (rec.output) {
    content["raw_text"] = rec.output->raw_text;
    content["salvage_stage"] = rec.output->salvage_stage;
    content["output"] = rec.output->to_wire();
  }
  if (rec.guard) content["guard"] = rec.guard->to_json();
  rec.ledger_index = append(EntryType::StepCompleted, std::move(content)).index;

  record_.add(rec.state, rec.kind == Primitive::Reflect
                             ? std::optional<ReflectMode>(guard ? ReflectMode::PostChallenge : ReflectMode::GapFilling)
                             : std::nullopt);
  attempts_.push_back(StepAttempts{rec.step_name, rec.kind, rec.attempts});
  steps_.push_back(rec);
  pending_.reset();

  const QualityGateResult qg = quality_gate({attempts_.back()}, {spec_.domain.governance.confidence_floors,
                                                                 spec_.domain.governance.escalate_to});
  if (qg.proposal) {
    std::string why = "quality gate: ";
    for (std::size_t i = 0; i < qg.breaches.size(); ++i) why += (i ? "; " : "") + qg.breaches[i];
    const TierApplication app =
        apply_tier(tier_lock_, *qg.proposal, why, spec_.domain.governance.default_tier, ledger_->size());
    if (app.raised) {
      append(EntryType::GovernanceAction, {{"event", "tier_raise"},
                                           {"source", "quality_gate"},
                                           {"step_name", rec.step_name},
                                           {"breaches", qg.breaches},
                                           {"tier_lock", app.lock.to_json()}});
      tier_lock_ = app.lock;
    }
  }
  return rec;
}

std::pair<GovernDetermination, TierApplication> Instance::compute_determination() const {
  GovernDetermination d;
  Tier proposed = Tier::Hold;
  try {
    d = evaluate_govern(record_, output_refs(), spec_.domain);
    proposed = d.tier_applied;
  } catch (const MissingDeliberate&) {
    d.record_status = classify_record(record_);
    d.rules_fired = {"b"};
    d.tier_rationale = "no deliberate determination exists";
    proposed = Tier::Hold;
  }
  TierApplication app = apply_tier(tier_lock_, proposed, d.tier_rationale, spec_.domain.governance.default_tier,
                                   ledger_->size());
  if (app.lowering_noop) {
    d.tier_rationale += (d.tier_rationale.empty() ? "" : "; ") + std::string("tier lock holds at ") +
                        std::string(to_string(app.lock.tier));
  }
  settle_tier(d, app.lock.tier, spec_.domain);
  return {d, app};
}

void Instance::do_determine() {
  const std::string g = last_step()->step_name;
  auto [d, app] = compute_determination();
  json content = {{"event", "determination"},
                  {"govern_step", g},
                  {"determination", d.to_json()},
                  {"tier_lock", app.lock.to_json()},
                  {"lowering_noop", app.lowering_noop}};
  if (const auto& out = last_step()->output) {
    content["model_view"] = {{"tier_applied", out->payload.value("tier_applied", std::string())},
                             {"disposition", out->payload.value("disposition", std::string())}};
  }
  append(EntryType::GovernanceAction, std::move(content));
  tier_lock_ = app.lock;
  determinations_[g] = d;
}

void Instance::do_dispatch() {
  const std::string g = last_step()->step_name;
  const GovernDetermination& d = determinations_.at(g);
  const std::string group = spec_.instance_id + "-" + g;
  current_group_ = group;
  const std::size_t want = expected_orders(g);
  std::size_t have = 0;
  for (const auto& o : orders_) have += o.group_id == group ? 1 : 0;

  const json payload = {{"instance_id", spec_.instance_id},
                        {"case_id", spec_.case_input.case_id},
                        {"case_view", case_view_},
                        {"disposition", d.disposition},
                        {"tier", std::string(to_string(d.tier_applied))},
                        {"tier_rationale", d.tier_rationale},
                        // Pinned by chain head, not file path, so the entry hashes the same
                        // wherever the data directory lives.
                        {"epistemic_record", {{"ledger_head", ledger_->head_hash()}, {"steps", steps_.size()}}}};
  for (std::size_t i = have + 1; i <= want; ++i) {
    WorkOrder o;
    o.order_id = group + "-" + std::to_string(i);
    o.instance_id = spec_.instance_id;
    o.mode = d.work_order->mode;
    o.kind = d.work_order->kind == "specialist_workflow" ? WorkOrderKind::SpecialistWorkflow : WorkOrderKind::HumanReview;
    o.group_id = group;
    o.payload = payload;
    o.sla_hours = d.work_order->sla_hours;
    json c = o.to_json();
    c["reason"] = d.work_order->reason;
    c["tier"] = std::string(to_string(d.tier_applied));
    append(EntryType::WorkOrder, c);
    orders_.push_back(std::move(o));
  }
  for (auto* o : current_group()) {
    if (o->state == HitlState::Suspended) {
      transition(*o, HitlState::PendingReview, Actor::system(), "queued for review", ledger_.get(), now());
    }
  }
}

void Instance::do_settle() {
  const std::string g = last_step()->step_name;
  const GovernDetermination& d = determinations_.at(g);
  const bool waits = d.work_order && d.work_order->mode != DelegationMode::FireAndForget;
  json content = {{"govern_step", g},
                  {"tier", std::string(to_string(d.tier_applied))},
                  {"disposition", d.disposition}};
  if (waits) {
    json ids = json::array();
    for (const auto* o : current_group()) ids.push_back(o->order_id);
    content["event"] = "suspended";
    content["orders"] = ids;
    append(EntryType::System, content);
    status_ = InstanceStatus::Suspended;
  } else {
    content["event"] = "completed";
    append(EntryType::System, content);
    status_ = InstanceStatus::Completed;
  }
  settled_.insert(g);
}

void Instance::do_apply_approved() {
  const std::string g = last_step()->step_name;
  for (auto* o : current_group()) {
    if (o->state == HitlState::Approved) {
      transition(*o, HitlState::Resumed, Actor::system(), "review approved", ledger_.get(), now());
    }
  }
  const GovernDetermination& d = determinations_.at(g);
  if (!resumed_.count(g)) {
    append(EntryType::System, {{"event", "resumed"}, {"govern_step", g}, {"outcome", "approved"}});
    resumed_.insert(g);
  }
  append(EntryType::System, {{"event", "completed"},
                             {"govern_step", g},
                             {"tier", std::string(to_string(d.tier_applied))},
                             {"disposition", d.disposition},
                             {"review", "approved"}});
  status_ = InstanceStatus::Completed;
}

void Instance::do_apply_rejected() {
  const std::string g = last_step()->step_name;
  std::optional<std::string> resume_step;
  std::string note;
  for (auto* o : current_group()) {
    if (o->state != HitlState::Rejected) continue;
    const bool rework = o->directive && !o->directive->resume_step.empty();
    transition(*o, rework ? HitlState::Resumed : HitlState::Terminated, Actor::system(),
               rework ? "sent back for rework" : "review rejected", ledger_.get(), now());
  }
  for (const auto* o : current_group()) {
    if (o->state == HitlState::Resumed && o->directive && !o->directive->resume_step.empty()) {
      resume_step = o->directive->resume_step;
      // The note that asked for the rework is the one before the system's.
      note = o->notes.size() >= 2 ? o->notes[o->notes.size() - 2] : std::string();
    }
  }
  if (resume_step && !resumed_.count(g)) {
    append(EntryType::System, {{"event", "resumed"},
                               {"govern_step", g},
                               {"outcome", "rejected"},
                               {"resume_step", *resume_step},
                               {"note", note}});
    resumed_.insert(g);
    directive_step_ = resume_step;
    reviewer_note_ = note;
    status_ = InstanceStatus::Running;
    return;
  }
  append(EntryType::System, {{"event", "terminated"}, {"govern_step", g}, {"reason", "review rejected"}});
  status_ = InstanceStatus::Terminated;
}

// ---- review actions -------------------------------------------------------

WorkOrder& Instance::pick_order(HitlState from, HitlState to, const std::optional<std::string>& order_id) {
  auto group = current_group();
  for (auto* o : group) {
    if (order_id && o->order_id != *order_id) continue;
    if (o->state == from) return *o;
  }
  if (order_id) {
    for (auto& o : orders_) {
      if (o.order_id == *order_id) throw IllegalStateTransition(std::string(to_string(o.state)), std::string(to_string(to)));
    }
    throw NotFound("no work order " + *order_id);
  }
  const std::string current = group.empty() ? std::string(to_string(status_)) : std::string(to_string(group.front()->state));
  throw IllegalStateTransition(current, std::string(to_string(to)));
}

void Instance::accept(const Actor& actor, const std::optional<std::string>& order_id) {
  std::lock_guard lock(mu_);
  WorkOrder& o = pick_order(HitlState::PendingReview, HitlState::Assigned, order_id);
  check_authorized(HitlState::UnderReview, actor);
  transition(o, HitlState::Assigned, actor, "accepted", ledger_.get(), now());
  transition(o, HitlState::UnderReview, actor, "review started", ledger_.get(), now());
  publish();
}

void Instance::approve(const Actor& actor, const std::string& note, const std::optional<std::string>& order_id) {
  std::lock_guard lock(mu_);
  WorkOrder& o = pick_order(HitlState::UnderReview, HitlState::Approved, order_id);
  transition(o, HitlState::Approved, actor, note, ledger_.get(), now());
  publish();
}

void Instance::reject(const Actor& actor, const std::string& note, const std::string& resume_step,
                      const std::optional<std::string>& order_id) {
  std::lock_guard lock(mu_);
  if (!resume_step.empty()) {
    auto kind = directive_kind(resume_step);
    if (!kind) throw ContractError("unknown resume step '" + resume_step + "'");
    const auto& avail = spec_.workflow.available_primitives;
    if (!avail.empty() && !avail.count(*kind)) {
      throw ContractError("resume step '" + resume_step + "' is not available in this workflow");
    }
  }
  WorkOrder& o = pick_order(HitlState::UnderReview, HitlState::Rejected, order_id);
  WorkOrder next = o;
  next.directive = ResumeDirective{resume_step};
  transition(next, HitlState::Rejected, actor, note, ledger_.get(), now());
  o = std::move(next);
  publish();
}

void Instance::reassign(const Actor& actor, const std::optional<std::string>& order_id) {
  std::lock_guard lock(mu_);
  WorkOrder& o = pick_order(HitlState::TimedOut, HitlState::PendingReview, order_id);
  transition(o, HitlState::PendingReview, actor, "re-queued", ledger_.get(), now());
  publish();
}

void Instance::terminate_timed_out(const Actor& actor, const std::string& note,
                                   const std::optional<std::string>& order_id) {
  std::lock_guard lock(mu_);
  WorkOrder& o = pick_order(HitlState::TimedOut, HitlState::Terminated, order_id);
  transition(o, HitlState::Terminated, actor, note, ledger_.get(), now());
  publish();
}

std::vector<std::string> Instance::sweep_sla(std::int64_t at) {
  std::lock_guard lock(mu_);
  std::vector<std::string> fired;
  for (auto& o : orders_) {
    if (!sla_armed(o.state) || !o.sla_deadline || at < *o.sla_deadline) continue;
    transition(o, HitlState::TimedOut, Actor::system(), "SLA deadline passed", ledger_.get(), at);
    fired.push_back(o.order_id);
  }
  if (!fired.empty()) publish();
  return fired;
}

InstanceStatus Instance::release_halt(const std::string& reason) {
  std::lock_guard lock(mu_);
  if (!halted_) return status_;
  append(EntryType::System, {{"event", "released"}, {"reason", reason}});
  halted_ = false;
  status_ = InstanceStatus::Running;
  return run_locked();
}

// ---- accessors ------------------------------------------------------------

InstanceStatus Instance::status() const {
  std::lock_guard lock(cache_mu_);
  const std::string s = summary_cache_.value("status", std::string("running"));
  for (auto st : {InstanceStatus::Running, InstanceStatus::Suspended, InstanceStatus::Completed,
                  InstanceStatus::Terminated, InstanceStatus::Halted}) {
    if (to_string(st) == s) return st;
  }
  return InstanceStatus::Running;
}

std::vector<StepRecord> Instance::steps() const {
  std::lock_guard lock(mu_);
  return steps_;
}

WorkflowEpistemicRecord Instance::record() const {
  std::lock_guard lock(mu_);
  return record_;
}

TierLock Instance::tier_lock() const {
  std::lock_guard lock(mu_);
  if (tier_lock_) return *tier_lock_;
  TierLock l;
  l.tier = spec_.domain.governance.default_tier;
  return l;
}

std::optional<GovernDetermination> Instance::determination() const {
  std::lock_guard lock(mu_);
  const StepRecord* last = last_step();
  if (last && determinations_.count(last->step_name)) return determinations_.at(last->step_name);
  if (!determinations_.empty()) return determinations_.rbegin()->second;
  return std::nullopt;
}

std::vector<WorkOrder> Instance::orders() const {
  std::lock_guard lock(mu_);
  return orders_;
}

std::vector<GuardrailFinding> Instance::findings() const {
  std::lock_guard lock(mu_);
  return findings_;
}

int Instance::chooser_calls() const {
  std::lock_guard lock(mu_);
  return chooser_calls_;
}

json Instance::summary() const {
  std::lock_guard lock(cache_mu_);
  return summary_cache_;
}

json Instance::to_json() const {
  json j = summary();
  json ledger = json::array();
  for (const auto& e : ledger_->snapshot()) {
    ledger.push_back({{"index", e.index},
                      {"entry_type", std::string(to_string(e.entry_type))},
                      {"content", e.content},
                      {"prior_hash", e.prior_hash},
                      {"hash", e.hash}});
  }
  j["ledger"] = std::move(ledger);
  std::unique_lock lock(mu_, std::try_to_lock);
  if (lock.owns_lock()) {
    json orders = json::array();
    for (const auto& o : orders_) orders.push_back(o.to_json());
    j["work_orders"] = std::move(orders);
    j["epistemic_record"] = record_.to_json();
    j["tier_lock"] = tier_lock_ ? tier_lock_->to_json() : json(nullptr);
    json findings = json::array();
    for (const auto& f : findings_) findings.push_back(f.to_json());
    j["guardrail_findings"] = std::move(findings);
    if (auto d = determination()) j["determination"] = d->to_json();
  }
  return j;
}

}  // namespace govdec
