#include "dbenet/autodiff.hpp"

namespace dbenet::ad {

namespace {
bool g_finite_checks = false;
bool g_backward_fault = false;
}  // namespace

void set_finite_checks(bool on) { g_finite_checks = on; }
bool finite_checks_enabled() { return g_finite_checks; }

void set_backward_fault_injection(bool on) { g_backward_fault = on; }
bool backward_fault_injected() { return g_backward_fault; }

}  // namespace dbenet::ad
