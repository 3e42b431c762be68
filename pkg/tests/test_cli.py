"""Command-line front end: streams, exit codes, command wiring."""

import json
import os
import signal
import subprocess
import sys
import time

import pytest

from quadpipe.cli import main
from quadpipe.kgr import Repository, serve
from quadpipe.rdf import isomorphic, parse

RULES = """\
@prefix rml: <http://semweb.mmlab.be/ns/rml#> .
@prefix rr: <http://www.w3.org/ns/r2rml#> .
@prefix ql: <http://semweb.mmlab.be/ns/ql#> .
@prefix map: <urn:maps:> .
map:rows rml:logicalSource [ rml:source "table" ; rml:referenceFormulation ql:CSV ] ;
  rr:subjectMap [ rr:template "urn:row:{id}" ] ;
  rr:predicateObjectMap [ rr:predicate <urn:v:name> ; rr:objectMap [ rml:reference "name" ] ] .
"""

SPEC = """\
version: 1
pipelines:
  - id: ticker
    source:
      kind: timer
      params:
        interval-millis: 50
    sinks:
      - kind: bus-publish
        params:
          topic: out
"""

NODESET = """\
<UANodeSet xmlns="http://opcfoundation.org/UA/2011/03/UANodeSet.xsd">
<NamespaceUris><Uri>http://f.example/a</Uri></NamespaceUris>
<Aliases><Alias Alias="HasComponent">i=47</Alias></Aliases>
<UAObject NodeId="ns=1;i=1" BrowseName="1:a"><DisplayName>A</DisplayName>
<References><Reference ReferenceType="HasComponent">ns=1;i=2</Reference></References></UAObject>
<UAVariable NodeId="ns=1;i=2" BrowseName="1:v"><DisplayName>V</DisplayName></UAVariable>
</UANodeSet>
"""


@pytest.fixture()
def kgr():
    repo = Repository()
    server = serve(0, repo)
    url = "http://127.0.0.1:%d" % server.server_address[1]
    yield repo, url
    server.shutdown()
    server.server_close()


class TestParsing:
    def test_unknown_flag_exits_1_with_usage_on_stderr(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["validate", "--nope"])
        assert info.value.code == 1
        captured = capsys.readouterr()
        assert captured.out == ""
        assert "usage" in captured.err

    def test_missing_required_flag(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["lift"])
        assert info.value.code == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_command(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["frobnicate"])
        assert info.value.code == 1


class TestValidate:
    def test_counts_pipelines(self, tmp_path, capsys):
        spec = tmp_path / "spec.yaml"
        spec.write_text(SPEC)
        assert main(["validate", "--spec", str(spec)]) == 0
        assert capsys.readouterr().out == "1 pipeline OK\n"

    def test_missing_file_names_the_path(self, tmp_path, capsys):
        missing = tmp_path / "ghost.yaml"
        assert main(["validate", "--spec", str(missing)]) == 1
        captured = capsys.readouterr()
        assert captured.out == ""
        assert "ghost.yaml" in captured.err

    def test_invalid_spec(self, tmp_path, capsys):
        spec = tmp_path / "spec.yaml"
        spec.write_text("version: 1\npipelines: []\n")
        assert main(["validate", "--spec", str(spec)]) == 1
        assert capsys.readouterr().err != ""


class TestLift:
    def test_turtle_on_stdout(self, tmp_path, capsys):
        (tmp_path / "rules.ttl").write_text(RULES)
        (tmp_path / "t.csv").write_text("id,name\n1,alice\n2,bob\n")
        code = main(["lift", "--rules", str(tmp_path / "rules.ttl"),
                     "--source", f"table={tmp_path / 't.csv'}"])
        assert code == 0
        out = parse(capsys.readouterr().out, format="turtle")
        expected = parse('<urn:row:1> <urn:v:name> "alice" . <urn:row:2> <urn:v:name> "bob" .',
                         format="turtle")
        assert isomorphic(out, expected)

    def test_out_file(self, tmp_path, capsys):
        (tmp_path / "rules.ttl").write_text(RULES)
        (tmp_path / "t.csv").write_text("id,name\n1,a\n")
        target = tmp_path / "out.ttl"
        code = main(["lift", "--rules", str(tmp_path / "rules.ttl"),
                     "--source", f"table={tmp_path / 't.csv'}", "--out", str(target)])
        assert code == 0
        assert capsys.readouterr().out == ""
        assert "urn:row:1" in target.read_text()

    def test_load_error_exits_1(self, tmp_path, capsys):
        code = main(["lift", "--rules", str(tmp_path / "missing.ttl")])
        assert code == 1
        assert "missing.ttl" in capsys.readouterr().err

    def test_bad_source_argument(self, tmp_path, capsys):
        (tmp_path / "rules.ttl").write_text(RULES)
        code = main(["lift", "--rules", str(tmp_path / "rules.ttl"), "--source", "nopath"])
        assert code == 1

    def test_execution_error_exits_2(self, tmp_path, capsys):
        # rules reference a source that was never supplied
        (tmp_path / "rules.ttl").write_text(RULES)
        code = main(["lift", "--rules", str(tmp_path / "rules.ttl")])
        assert code == 2
        assert "table" in capsys.readouterr().err


class TestLower:
    def test_identity_template(self, tmp_path, capsys):
        template = tmp_path / "t.txt"
        template.write_text("plain text, no queries\n")
        graph = tmp_path / "g.ttl"
        graph.write_text("")
        assert main(["lower", "--template", str(template), "--graph", str(graph)]) == 0
        assert capsys.readouterr().out == "plain text, no queries\n"

    def test_renders_bindings(self, tmp_path, capsys):
        template = tmp_path / "t.txt"
        template.write_text('[[#query "SELECT ?n WHERE { ?s <urn:v:name> ?n . }"]][[?n]];[[/query]]')
        graph = tmp_path / "g.ttl"
        graph.write_text('<urn:a> <urn:v:name> "x" . <urn:b> <urn:v:name> "y" .')
        assert main(["lower", "--template", str(template), "--graph", str(graph)]) == 0
        assert sorted(capsys.readouterr().out.rstrip(";").split(";")) == ["x", "y"]

    def test_template_load_error_exits_1(self, tmp_path, capsys):
        template = tmp_path / "t.txt"
        template.write_text('[[#query "not a query"]][[/query]]')
        graph = tmp_path / "g.ttl"
        graph.write_text("")
        assert main(["lower", "--template", str(template), "--graph", str(graph)]) == 1


class TestKgrCommands:
    def test_import_then_export_round_trip(self, kgr, tmp_path, capsys):
        repo, url = kgr
        source = tmp_path / "ns.xml"
        source.write_text(NODESET)
        assert main(["nodeset-import", "--file", str(source), "--kgr", url]) == 0
        answer = json.loads(capsys.readouterr().out)
        assert answer == {"id": "nodeset-1", "nodeCount": 2, "diagnostics": []}
        target = tmp_path / "out.xml"
        assert main(["nodeset-export", "--id", "nodeset-1", "--kgr", url,
                     "--out", str(target)]) == 0
        # a follow-up import of the export sees the same node count
        assert main(["nodeset-import", "--file", str(target), "--kgr", url]) == 0
        assert json.loads(capsys.readouterr().out)["nodeCount"] == 2

    def test_kgr_url_from_environment(self, kgr, tmp_path, capsys, monkeypatch):
        _, url = kgr
        monkeypatch.setenv("KGR_URL", url)
        source = tmp_path / "ns.xml"
        source.write_text(NODESET)
        assert main(["nodeset-import", "--file", str(source)]) == 0

    def test_no_kgr_url_exits_1(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("KGR_URL", raising=False)
        source = tmp_path / "ns.xml"
        source.write_text(NODESET)
        assert main(["nodeset-import", "--file", str(source)]) == 1
        assert "KGR_URL" in capsys.readouterr().err

    def test_unreachable_repository_exits_2(self, tmp_path, capsys):
        source = tmp_path / "ns.xml"
        source.write_text(NODESET)
        code = main(["nodeset-import", "--file", str(source), "--kgr", "http://127.0.0.1:1"])
        assert code == 2

    def test_unknown_export_id_exits_1(self, kgr, capsys):
        _, url = kgr
        assert main(["nodeset-export", "--id", "nodeset-9", "--kgr", url]) == 1

    def test_import_rejected_document_exits_1(self, kgr, tmp_path, capsys):
        _, url = kgr
        source = tmp_path / "bad.xml"
        source.write_text("<wrong/>")
        assert main(["nodeset-import", "--file", str(source), "--kgr", url]) == 1


class TestMatch:
    RECIPE = {"id": "urn:recipe:r", "name": "r",
              "capabilities": [{"id": "c", "semantic-type": "urn:x:Grip"}]}

    def test_match_by_stored_id(self, kgr, capsys):
        repo, url = kgr
        repo.put_recipe("urn:recipe:r", json.dumps(self.RECIPE).encode())
        assert main(["match", "--recipe", "urn:recipe:r", "--kgr", url]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["overall-satisfiable"] is False

    def test_match_by_local_file_over_sparql(self, kgr, tmp_path, capsys):
        repo, url = kgr
        td = {"id": "urn:dev:a", "title": "A", "actions": {"g": {"@type": "urn:x:Grip"}}}
        repo.put_thing("urn:dev:a", json.dumps(td).encode())
        path = tmp_path / "recipe.json"
        path.write_text(json.dumps(self.RECIPE))
        assert main(["match", "--recipe", str(path), "--kgr", url]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["entries"][0]["candidates"] == ["urn:dev:a"]
        assert report["overall-satisfiable"] is True

    def test_unsatisfied_match_still_exits_0(self, kgr, tmp_path, capsys):
        _, url = kgr
        path = tmp_path / "recipe.json"
        path.write_text(json.dumps(self.RECIPE))
        assert main(["match", "--recipe", str(path), "--kgr", url]) == 0

    def test_unknown_recipe_id_exits_1(self, kgr, capsys):
        _, url = kgr
        assert main(["match", "--recipe", "urn:recipe:ghost", "--kgr", url]) == 1


class TestRunProcess:
    def test_interrupt_prints_final_metrics(self, tmp_path):
        spec = tmp_path / "spec.yaml"
        spec.write_text(SPEC)
        env = dict(os.environ, PYTHONPATH="src")
        proc = subprocess.Popen(
            [sys.executable, "-m", "quadpipe.cli", "run", "--spec", str(spec)],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, env=env,
        )
        time.sleep(1.5)
        proc.send_signal(signal.SIGINT)
        out, err = proc.communicate(timeout=15)
        assert proc.returncode == 0
        assert b"pipeline_messages_in" in out
        count = [l for l in out.splitlines() if l.startswith(b'pipeline_messages_in{pipeline="ticker"}')]
        assert 5 <= float(count[0].split()[-1]) <= 40

    def test_metrics_port_serves_http(self, tmp_path):
        import urllib.request

        spec = tmp_path / "spec.yaml"
        spec.write_text(SPEC)
        env = dict(os.environ, PYTHONPATH="src")
        proc = subprocess.Popen(
            [sys.executable, "-m", "quadpipe.cli", "run", "--spec", str(spec),
             "--metrics-port", "18877"],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, env=env,
        )
        try:
            deadline = time.time() + 10
            body = None
            while time.time() < deadline:
                try:
                    with urllib.request.urlopen("http://127.0.0.1:18877/metrics", timeout=2) as r:
                        body = r.read()
                    break
                except OSError:
                    time.sleep(0.1)
            assert body is not None and b"pipeline_messages_in" in body
        finally:
            proc.send_signal(signal.SIGINT)
            proc.communicate(timeout=15)

    def test_serve_data_preload(self, tmp_path):
        data = tmp_path / "data"
        data.mkdir()
        (data / "thing.json").write_text(json.dumps({"id": "urn:dev:a", "title": "A"}))
        env = dict(os.environ, PYTHONPATH="src")
        proc = subprocess.Popen(
            [sys.executable, "-m", "quadpipe.cli", "serve", "--port", "18878",
             "--data", str(data)],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, env=env,
        )
        try:
            import urllib.request

            deadline = time.time() + 10
            body = None
            while time.time() < deadline:
                try:
                    with urllib.request.urlopen(
                        "http://127.0.0.1:18878/things/urn%3Adev%3Aa", timeout=2
                    ) as r:
                        body = r.read()
                    break
                except urllib.error.HTTPError:
                    break
                except OSError:
                    time.sleep(0.1)
            assert body is not None and json.loads(body)["id"] == "urn:dev:a"
        finally:
            proc.send_signal(signal.SIGINT)
            out, err = proc.communicate(timeout=15)
            assert proc.returncode == 0
            assert b"loaded thing" in err
