#pragma once

#include <httplib.h>

#include "aaa/conduct_service.hpp"

namespace aaa::http {

// POST /trials, POST /trials/{id}/outcomes, GET /trials/{id},
// GET /trials/{id}/recommendation, GET /healthz.
void register_routes(httplib::Server& server, TrialService& service);

json error_envelope(const std::string& code, const std::string& message, const std::string& field);

}  // namespace aaa::http
