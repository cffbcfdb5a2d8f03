#include "govdec/kernel.hpp"

#include "govdec/error.hpp"

namespace govdec::kernel {

std::string_view to_string(Phase p) noexcept {
  switch (p) {
    case Phase::Idle: return "idle";
    case Phase::Active: return "active";
    case Phase::AwaitingResult: return "awaiting_result";
    case Phase::Done: return "done";
  }
  return "idle";
}

void WorkflowModel::add_component(std::string step_id, std::optional<Primitive> primitive) {
  std::lock_guard lock(mutex_);
  if (by_id_.count(step_id)) throw ContractError("duplicate component: " + step_id);
  by_id_[step_id] = components_.size();
  components_.push_back(StepComponent{std::move(step_id), primitive, Phase::Idle, kInfinity});
}

void WorkflowModel::couple(const std::string& from, const std::string& to) {
  std::lock_guard lock(mutex_);
  find(from);
  find(to);
  couplings_[from] = to;
}

void WorkflowModel::start(const std::string& step_id) {
  std::lock_guard lock(mutex_);
  for (const auto& c : components_) {
    if (c.time_advance == 0) throw MultipleActive("model already started at " + c.step_id);
  }
  set_phase(find(step_id), Phase::Active);
}

std::optional<std::string> WorkflowModel::schedule() const {
  std::lock_guard lock(mutex_);
  const StepComponent* best = nullptr;
  for (const auto& c : components_) {
    if (c.time_advance == kInfinity) continue;
    if (best && best->time_advance == c.time_advance) {
      throw MultipleActive("components " + best->step_id + " and " + c.step_id +
                           " are simultaneously active");
    }
    if (!best || c.time_advance < best->time_advance) best = &c;
  }
  if (!best) return std::nullopt;
  return best->step_id;
}

std::uint64_t WorkflowModel::inject(const std::string& target, std::any payload,
                                    std::optional<std::uint64_t> sequence) {
  std::lock_guard lock(mutex_);
  auto it = by_id_.find(target);
  if (it == by_id_.end()) throw UnknownTarget("unknown injection target: " + target);
  const StepComponent& c = components_[it->second];
  if (c.phase != Phase::AwaitingResult || pending_target_[target]) {
    throw IllegalPhase("injection target " + target + " is " + std::string(to_string(c.phase)) +
                       (pending_target_[target] ? " with an injection already queued" : ""));
  }
  std::uint64_t seq = sequence.value_or(next_sequence_);
  if (seq <= last_consumed_ || queue_.count(seq)) {
    throw IllegalPhase("injection sequence " + std::to_string(seq) + " already used");
  }
  next_sequence_ = std::max(next_sequence_, seq + 1);
  pending_target_[target] = true;
  queue_.emplace(seq, InjectedEvent{target, std::move(payload), seq});
  injected_.notify_all();
  return seq;
}

std::size_t WorkflowModel::drain() {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  while (!queue_.empty()) {
    auto node = queue_.extract(queue_.begin());
    InjectedEvent ev = std::move(node.mapped());
    StepComponent& c = find(ev.target);
    pending_target_[ev.target] = false;
    // extTransition: awaiting -> active at time advance 0.
    set_phase(c, Phase::Active);
    pending_work_order_ = false;
    last_consumed_ = ev.sequence;
    consumed_.push_back(ev.sequence);
    deliveries_[ev.target] = std::move(ev);
    ++n;
  }
  return n;
}

bool WorkflowModel::wait_for_injection(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  return injected_.wait_for(lock, timeout, [&] { return !queue_.empty(); });
}

const StepComponent& WorkflowModel::component(const std::string& step_id) const {
  std::lock_guard lock(mutex_);
  return find(step_id);
}

std::vector<StepComponent> WorkflowModel::components() const {
  std::lock_guard lock(mutex_);
  return components_;
}

bool WorkflowModel::has_component(const std::string& step_id) const {
  std::lock_guard lock(mutex_);
  return by_id_.count(step_id) > 0;
}

std::optional<InjectedEvent> WorkflowModel::take_delivery(const std::string& step_id) {
  std::lock_guard lock(mutex_);
  auto it = deliveries_.find(step_id);
  if (it == deliveries_.end()) return std::nullopt;
  InjectedEvent ev = std::move(it->second);
  deliveries_.erase(it);
  return ev;
}

void WorkflowModel::apply(const std::string& source, const Transition& t) {
  std::lock_guard lock(mutex_);
  StepComponent& src = find(source);
  switch (t.kind) {
    case Transition::Kind::Await:
      set_phase(src, Phase::AwaitingResult);
      break;
    case Transition::Kind::Route: {
      std::string target = t.target;
      if (target.empty()) {
        auto it = couplings_.find(source);
        if (it == couplings_.end()) throw ContractError("no coupling from " + source);
        target = it->second;
      }
      StepComponent& dst = find(target);
      set_phase(src, Phase::Idle);
      set_phase(dst, Phase::Active);
      break;
    }
    case Transition::Kind::Suspend:
      set_phase(src, Phase::AwaitingResult);
      pending_work_order_ = true;
      break;
    case Transition::Kind::Terminate:
      for (auto& c : components_) set_phase(c, Phase::Done);
      break;
  }
  ++clock_;
}

bool WorkflowModel::pending_work_order() const {
  std::lock_guard lock(mutex_);
  return pending_work_order_;
}

void WorkflowModel::set_pending_work_order(bool pending) {
  std::lock_guard lock(mutex_);
  pending_work_order_ = pending;
}

bool WorkflowModel::any_awaiting() const {
  std::lock_guard lock(mutex_);
  for (const auto& c : components_) {
    if (c.phase == Phase::AwaitingResult) return true;
  }
  return false;
}

bool WorkflowModel::has_queued_injections() const {
  std::lock_guard lock(mutex_);
  return !queue_.empty();
}

std::uint64_t WorkflowModel::clock() const {
  std::lock_guard lock(mutex_);
  return clock_;
}

std::vector<std::uint64_t> WorkflowModel::consumed_sequences() const {
  std::lock_guard lock(mutex_);
  return consumed_;
}

void WorkflowModel::restore_phase(const std::string& step_id, Phase phase) {
  std::lock_guard lock(mutex_);
  set_phase(find(step_id), phase);
}

StepComponent& WorkflowModel::find(const std::string& step_id) {
  auto it = by_id_.find(step_id);
  if (it == by_id_.end()) throw UnknownTarget("unknown component: " + step_id);
  return components_[it->second];
}

const StepComponent& WorkflowModel::find(const std::string& step_id) const {
  auto it = by_id_.find(step_id);
  if (it == by_id_.end()) throw UnknownTarget("unknown component: " + step_id);
  return components_[it->second];
}

void WorkflowModel::set_phase(StepComponent& c, Phase p) {
  c.phase = p;
  c.time_advance = p == Phase::Active ? 0 : kInfinity;
}

TerminalReport run_to_quiescence(WorkflowModel& model, const Executor& executor,
                                 std::size_t step_cap, std::chrono::milliseconds stall_timeout) {
  TerminalReport report;
  while (true) {
    model.drain();
    const auto next = model.schedule();
    if (!next) {
      if (model.pending_work_order()) {
        report.status = TerminalReport::Status::Suspended;
        return report;
      }
      if (model.any_awaiting()) {
        if (!model.has_queued_injections() && !model.wait_for_injection(stall_timeout)) {
          throw Error("kernel stalled: components await results but nothing was injected");
        }
        continue;
      }
      report.status = TerminalReport::Status::Terminated;
      return report;
    }
    auto delivery = model.take_delivery(*next);
    const Transition t = executor(model.component(*next), std::move(delivery));
    model.apply(*next, t);
    if (t.on_applied) t.on_applied();
    ++report.rounds;
    if (t.completed_step) {
      report.executed_steps.push_back(*t.completed_step);
      if (report.executed_steps.size() > step_cap) {
        throw StepLimitExceeded("step cap of " + std::to_string(step_cap) + " exceeded");
      }
    }
    model.schedule();  // at most one active after every round
  }
}

}  // namespace govdec::kernel
