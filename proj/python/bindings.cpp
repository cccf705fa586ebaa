#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "rad/cli.hpp"
#include "rad/embed_store.hpp"
#include "rad/error.hpp"
#include "rad/evaluation.hpp"
#include "rad/gateway.hpp"
#include "rad/http_gateway.hpp"
#include "rad/labeling.hpp"
#include "rad/retrieval.hpp"
#include "rad/spatial_loss.hpp"
#include "rad/taxonomy.hpp"

namespace py = pybind11;
using namespace rad;

namespace {

MetaAction action_arg(const std::string& label) {
  const auto a = action_from_label(label);
  if (!a) throw Error(ErrorCode::InvalidArgument, "unknown meta-action '" + label + "'");
  return *a;
}

ImageKind kind_arg(const std::string& kind) {
  if (kind == "front_view") return ImageKind::FrontView;
  if (kind == "bev") return ImageKind::Bev;
  throw Error(ErrorCode::InvalidArgument, "kind must be 'front_view' or 'bev'");
}

Bytes to_bytes(const py::bytes& b) {
  const std::string s = b;
  return Bytes(s.begin(), s.end());
}

py::bytes from_bytes(const Bytes& b) {
  return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

py::dict chat_request_dict(const ChatRequest& r) {
  py::list messages;
  for (const auto& part : r.messages) {
    if (const auto* t = std::get_if<TextPart>(&part)) {
      messages.append(py::make_tuple("text", t->text));
    } else {
      messages.append(py::make_tuple("image", from_bytes(std::get<ImagePart>(part).data)));
    }
  }
  py::dict d;
  d["system"] = r.system;
  d["messages"] = messages;
  d["temperature"] = r.temperature;
  d["max_tokens"] = r.max_tokens;
  d["echo"] = r.echo;
  return d;
}

py::dict hit_dict(const RetrievalHit& h) {
  py::dict d;
  d["scene_id"] = h.scene_id;
  d["sim_fv"] = h.sim_fv;
  d["sim_bev"] = h.sim_bev;
  d["sim_overall"] = h.sim_overall;
  d["rank"] = h.rank;
  return d;
}

}  // namespace

PYBIND11_MODULE(_rad, m) {
  m.doc() = "Retrieval-augmented meta-action engine core";

  static py::exception<Error> rad_error(m, "RadError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      // args = (code name, message)
      PyErr_SetObject(rad_error.ptr(),
                      py::make_tuple(std::string(error_code_name(e.code())), e.what()).ptr());
    }
  });

  m.def("labels", [] {
    std::vector<std::string> out;
    for (MetaAction a : kAllMetaActions) out.emplace_back(label_name(a));
    return out;
  });
  m.def("group", [](const std::string& label) { return std::string(group_name(group_of(action_arg(label)))); });
  m.def("canonical_phrase", [](const std::string& label) {
    return std::string(canonical_phrase(action_arg(label)));
  });
  m.def("parse_meta_action",
        [](const std::string& text) { return std::string(label_name(parse_meta_action(text))); });
  m.def("semantic_similarity", [](const std::string& gt, const std::string& pred) {
    return semantic_similarity(action_arg(gt), action_arg(pred));
  });

  m.def("overall_score",
        [](double ema, double macro, double weighted, double pms, std::optional<std::string> weights) {
          return overall_score(ema, macro, weighted, pms,
                               weights ? ScoreWeights::parse(*weights) : ScoreWeights{});
        },
        py::arg("ema"), py::arg("macro_f1"), py::arg("weighted_f1"), py::arg("pms"),
        py::arg("weights") = py::none());
  m.def("evaluate_json",
        [](const std::vector<std::pair<std::string, std::optional<std::string>>>& pairs,
           std::optional<std::string> weights, std::size_t k) {
          std::vector<PredictionPair> in;
          for (const auto& [gt, pred] : pairs) {
            in.push_back({"", action_arg(gt), pred ? std::optional(action_arg(*pred)) : std::nullopt});
          }
          return evaluate(in, weights ? ScoreWeights::parse(*weights) : ScoreWeights{}, k).to_json();
        },
        py::arg("pairs"), py::arg("weights") = py::none(), py::arg("k") = kNumMetaActions);

  m.def("cosine", [](const std::vector<float>& a, const std::vector<float>& b) { return cosine(a, b); });
  m.def("blended_similarity", &blended_similarity, py::arg("sim_fv"), py::arg("sim_bev"),
        py::arg("omega"));

  py::class_<EmbeddingStore>(m, "EmbeddingStore")
      .def(py::init<>())
      .def(py::init<std::size_t, std::size_t>(), py::arg("d_fv"), py::arg("d_bev"))
      .def_static("open", [](const std::string& path) { return EmbeddingStore::open(path); })
      .def("put", [](EmbeddingStore& s, std::string id, const std::vector<float>& fv,
                     const std::vector<float>& bev) { s.put(std::move(id), fv, bev); })
      .def("get", [](const EmbeddingStore& s, const std::string& id) {
        const auto r = s.get(id);
        return py::make_tuple(r.v_fv, r.v_bev);
      })
      .def("__len__", &EmbeddingStore::size)
      .def("__contains__", &EmbeddingStore::contains)
      .def_property_readonly("d_fv", &EmbeddingStore::d_fv)
      .def_property_readonly("d_bev", &EmbeddingStore::d_bev)
      .def("seal", &EmbeddingStore::seal)
      .def("persist", [](const EmbeddingStore& s, const std::string& path) { s.persist(path); })
      .def("top_k",
           [](const EmbeddingStore& s, const std::vector<float>& fv, const std::vector<float>& bev,
              double omega, std::size_t k) {
             py::list out;
             for (const auto& h : top_k({fv, bev}, s, {.omega = omega, .k = k})) out.append(hit_dict(h));
             return out;
           },
           py::arg("v_fv"), py::arg("v_bev"), py::arg("omega") = 0.5, py::arg("k") = 1);

  m.def("loss_from_jsonl", [](const std::string& text) {
    const auto samples = parse_spatial_samples(text);
    return batch_loss(samples);
  });

  m.def("extract_meta_action",
        [](const std::vector<std::tuple<double, double, double, double, double>>& poses) {
          std::vector<EgoPose> in;
          for (const auto& [t, x, y, heading, speed] : poses) in.push_back({t, x, y, heading, speed});
          return std::string(label_name(extract_meta_action(in)));
        },
        py::arg("poses"));

  // Wire format used by model services.
  m.def("embed_request_json", [](const py::bytes& image, const std::string& kind) {
    return embed_request_json(to_bytes(image), kind_arg(kind));
  });
  m.def("parse_embed_request", [](const std::string& body) {
    const auto r = parse_embed_request(body);
    return py::make_tuple(from_bytes(r.image), std::string(image_kind_name(r.kind)));
  });
  m.def("embed_response_json", [](const std::vector<float>& v) { return embed_response_json(v); });
  m.def("parse_embed_response", [](const std::string& body) { return parse_embed_response(body); });
  m.def("parse_chat_request", [](const std::string& body) { return chat_request_dict(parse_chat_request(body)); });
  m.def("chat_response_json", [](const std::string& text) { return chat_response_json(text); });
  m.def("parse_chat_response", [](const std::string& body) { return parse_chat_response(body); });
  m.def("echo_reply", [](const std::string& chat_body) { return echo_reply(parse_chat_request(chat_body)); });
  m.def("mock_embedding", [](const py::bytes& image, const std::string& kind, std::size_t dim) {
    return mock_embedding(to_bytes(image), kind_arg(kind), dim);
  });

  m.def("contract_checks",
        [](const std::string& embed_url, const std::string& chat_url, std::size_t calls) {
          HttpGateway http({embed_url, chat_url, std::chrono::seconds(30), ""});
          std::vector<std::tuple<std::string, bool, std::string>> out;
          for (const auto& c : run_contract_checks(http, calls)) out.emplace_back(c.name, c.passed, c.detail);
          return out;
        },
        py::arg("embed_url"), py::arg("chat_url"), py::arg("calls") = 100);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int status = 0;
    {
      py::gil_scoped_release release;
      status = run(args, out, err);
    }
    return py::make_tuple(status, out.str(), err.str());
  });
}
