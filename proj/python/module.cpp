#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <atomic>
#include <filesystem>
#include <memory>
#include <sstream>

#include "aerobroker/api.hpp"
#include "aerobroker/broker.hpp"
#include "aerobroker/canonical.hpp"
#include "aerobroker/config.hpp"
#include "aerobroker/file_io.hpp"
#include "aerobroker/ledger.hpp"
#include "cli.hpp"

namespace py = pybind11;
using namespace aerobroker;

namespace {

// A broker plus its request dispatcher, driven by a manual clock.
class PyBroker {
public:
    PyBroker(std::optional<std::filesystem::path> data_dir, const std::string& config_json, Timestamp now,
             std::optional<std::uint64_t> seed)
        : now_(now) {
        auto cfg = config::parse(config_json, std::filesystem::current_path());
        auto settings = config::settings(cfg);
        broker::RandomFill random = seed ? broker::seeded_random(*seed) : broker::RandomFill{};
        broker_ = data_dir ? broker::Broker::open_dir(std::move(settings), *data_dir, std::move(random))
                           : std::make_unique<broker::Broker>(std::move(settings), std::move(random));
        api_ = std::make_unique<api::Api>(*broker_, cfg.auth, [this] { return now_.load(); });
    }

    std::pair<int, std::string> request(const std::string& method, const std::string& path, const std::string& body,
                                        std::optional<std::string> api_key, std::optional<std::string> idem) {
        api::Request r{method, path, body, std::move(api_key), std::move(idem)};
        py::gil_scoped_release release;
        auto out = api_->handle(r);
        return {out.status, out.text()};
    }

    std::string canonical_state() const { return canon::write(broker_->canonical_state()); }
    Timestamp now() const { return now_.load(); }
    void set_now(Timestamp t) { now_.store(t); }
    void advance(Timestamp seconds) { now_.fetch_add(seconds); }

private:
    std::atomic<Timestamp> now_;
    std::unique_ptr<broker::Broker> broker_;
    std::unique_ptr<api::Api> api_;
};

py::dict report_dict(const ledger::ChainReport& r) {
    py::dict d;
    d["ok"] = r.ok;
    d["height"] = r.height;
    d["first_corrupt_height"] = r.first_corrupt_height ? py::cast(*r.first_corrupt_height) : py::none();
    d["detail"] = r.detail;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Data brokerage core: canonical JSON, contracts, escrow and ledger";

    static py::exception<BrokerError> broker_error(m, "BrokerError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const BrokerError& e) {
            py::object err = py::reinterpret_borrow<py::object>(broker_error.ptr())(e.what());
            err.attr("code") = std::string(to_string(e.code()));
            err.attr("detail") = e.detail();
            PyErr_SetObject(broker_error.ptr(), err.ptr());
        }
    });

    m.def("canonicalize", [](const std::string& json) { return canon::write(canon::parse(json)); }, py::arg("json"),
          "Canonical bytes of a JSON document (sorted keys, NFC strings, no whitespace).");
    m.def("digest", [](const std::string& json) { return canon::CanonicalDocument::of(canon::parse(json)).digest.hex(); },
          py::arg("json"), "Lowercase hex SHA-256 of the canonical form.");
    m.def("verify_ledger_bytes", [](py::bytes b) { return report_dict(ledger::verify_block_file(std::string(b))); },
          py::arg("data"));
    m.def("verify_ledger_file",
          [](const std::filesystem::path& p) { return report_dict(ledger::verify_block_file(io::read_file(p))); },
          py::arg("path"));
    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int rc;
            {
                py::gil_scoped_release release;
                rc = cli::run(args, out, err);
            }
            return py::make_tuple(rc, out.str(), err.str());
        },
        py::arg("args"), "Runs one CLI invocation in-process; returns (exit_code, stdout, stderr).");
    m.def("builtin_scenarios", &cli::builtin_scenarios);

    py::class_<PyBroker>(m, "Broker")
        .def(py::init<std::optional<std::filesystem::path>, const std::string&, Timestamp, std::optional<std::uint64_t>>(),
             py::arg("data_dir") = py::none(), py::arg("config_json") = "{}", py::arg("now") = 1'700'000'000,
             py::arg("seed") = py::none())
        .def("request", &PyBroker::request, py::arg("method"), py::arg("path"), py::arg("body") = "",
             py::arg("api_key") = py::none(), py::arg("idempotency_key") = py::none(),
             "Dispatches one API request; returns (status, canonical JSON body).")
        .def("canonical_state", &PyBroker::canonical_state)
        .def("advance", &PyBroker::advance, py::arg("seconds"))
        .def_property("now", &PyBroker::now, &PyBroker::set_now);
}
