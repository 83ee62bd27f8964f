#pragma once

#include <string>

namespace ztac {

// Security properties the requesting connection negotiated, as reported by
// the enforcement point. Used to evaluate channel trust attributes when the
// information point has no stored value for the channel id.
struct ChannelDescriptor {
  std::string id;
  std::string authentication;
  std::string confidentiality;
  std::string integrity;
};

struct RequestContext {
  std::string timestamp;  // RFC 3339, e.g. "2026-08-25T14:03:22Z"
  std::string location;
};

// One resource access request as submitted by an enforcement point.
struct DecisionRequest {
  std::string request_id;
  std::string user;
  std::string device;
  ChannelDescriptor channel;
  std::string resource;
  std::string action;
  RequestContext context;
};

// Hour-of-day from an RFC 3339 timestamp, or -1 if the text does not parse.
int timestamp_hour(const std::string& timestamp);

}  // namespace ztac
