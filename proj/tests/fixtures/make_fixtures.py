#!/usr/bin/env python3
"""Regenerates tests/fixtures/e2e. Output is deterministic; rerun after edits.

expected_records.jsonl is written from the hand-computed values in EXPECTED
below, not from the C++ code. The arithmetic behind each value sits next to it.
"""

import gzip
import io
import json
import os
import tarfile
import zlib

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "e2e")

FEED_PREFIX = "http://export.arxiv.org/api/query?"
GROBID = "http://grobid.test"
VERIFIER = "http://verifier.test/choose"


def write(rel, data, root=OUT):
    path = os.path.join(root, rel)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode) as f:
        f.write(data)


# ---- PDF ---------------------------------------------------------------------

def pdf_escape(s):
    return s.replace("\\", "\\\\").replace("(", "\\(").replace(")", "\\)")


def make_pdf(title, lines, pages=None):
    """lines: one page of text lines; pages: several such lists instead."""
    pages = pages or [lines]
    streams = []
    for page in pages:
        ops = ["BT", "/F1 11 Tf", "72 720 Td", "14 TL"]
        for i, line in enumerate(page):
            if i:
                ops.append("T*")
            ops.append("(%s) Tj" % pdf_escape(line))
        ops.append("ET")
        streams.append(zlib.compress("\n".join(ops).encode("latin-1"), 9))

    # 1 catalog, 2 pages, 3 font, 4 info, then page/content pairs
    n = len(pages)
    kids = " ".join("%d 0 R" % (5 + 2 * i) for i in range(n)).encode()
    objs = [
        b"<< /Type /Catalog /Pages 2 0 R >>",
        b"<< /Type /Pages /Kids [" + kids + b"] /Count %d >>" % n,
        b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>",
        b"<< /Title (" + pdf_escape(title).encode("latin-1") + b") >>",
    ]
    for i, stream in enumerate(streams):
        objs.append(b"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] /Contents %d 0 R "
                    b"/Resources << /Font << /F1 3 0 R >> >> >>" % (6 + 2 * i))
        objs.append(b"<< /Length %d /Filter /FlateDecode >>\nstream\n" % len(stream) + stream + b"\nendstream")
    out = io.BytesIO()
    out.write(b"%PDF-1.4\n%\xe2\xe3\xcf\xd3\n")
    offsets = []
    for n, body in enumerate(objs, start=1):
        offsets.append(out.tell())
        out.write(b"%d 0 obj\n" % n + body + b"\nendobj\n")
    xref = out.tell()
    out.write(b"xref\n0 %d\n0000000000 65535 f \n" % (len(objs) + 1))
    for off in offsets:
        out.write(b"%010d 00000 n \n" % off)
    out.write(b"trailer\n<< /Size %d /Root 1 0 R /Info 4 0 R >>\nstartxref\n%d\n%%%%EOF\n" % (len(objs) + 1, xref))
    return out.getvalue()


# ---- TEI ---------------------------------------------------------------------

def xml_escape(s):
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def make_tei(title, abstract, divs):
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<TEI xmlns="http://www.tei-c.org/ns/1.0">',
        "<teiHeader><fileDesc><titleStmt><title>%s</title></titleStmt></fileDesc>" % xml_escape(title),
        "<profileDesc><abstract><div><p>",
    ]
    parts += ["<s>%s</s>" % xml_escape(s) for s in abstract]
    parts += ["</p></div></abstract></profileDesc></teiHeader>", "<text><body>"]
    for n, (head, sentences) in enumerate(divs, start=1):
        parts.append('<div><head n="%d">%s</head><p>' % (n, xml_escape(head)))
        parts += ["<s>%s</s>" % xml_escape(s) for s in sentences]
        parts.append("</p></div>")
    parts += ["</body></text>", "</TEI>", ""]
    return "\n".join(parts)


# ---- e-print sources ---------------------------------------------------------

def gz(data):
    buf = io.BytesIO()
    with gzip.GzipFile(fileobj=buf, mode="wb", mtime=0, filename="") as f:
        f.write(data)
    return buf.getvalue()


def make_tar_gz(files, fmt=tarfile.USTAR_FORMAT):
    buf = io.BytesIO()
    with tarfile.open(fileobj=buf, mode="w", format=fmt) as tar:
        for name, data in files:
            if isinstance(data, str):
                data = data.encode("utf-8")
            info = tarfile.TarInfo(name)
            info.size = len(data)
            info.mtime = 0
            info.mode = 0o644
            tar.addfile(info, io.BytesIO(data))
    return gz(buf.getvalue())


# ---- corpus ------------------------------------------------------------------

PAPERS = []


def paper(pid, hour, title, abstract, cats, day="2024-03-01"):
    p = {"id": pid, "published": "%sT%02d:00:00Z" % (day, hour), "title": title, "abstract": abstract, "cats": cats}
    PAPERS.append(p)
    return p


# 2403.00001: structured parse, tar.gz source, verifier picks the HF page.
P1 = paper("2403.00001", 1, "FooBench: Images for Foo Recognition",
           "We introduce a new dataset of annotated images for foo recognition. "
           "We release the data under an open license.", ["cs.CV"])
P1_TEI = make_tei(P1["title"], [
    "We introduce a new dataset of annotated images for foo recognition.",  # annotated 1
    "We release the data under an open license.",                           # we release 2
], [
    ("Introduction", ["Recognizing foo in the wild remains difficult.",
                      "Existing collections are small and noisy."]),
    ("The FooBench Dataset", [
        "Our dataset contains 12,000 annotated images of foo.",  # 4 + 2 + 1 + count 2 = 9
        "We collect 12,000 images from public webcams.",         # 3 + count 2 = 5
        "The dataset is split into 10,000 training and 2,000 test images.",  # 2 + 2 = 4, not > 0.5
    ]),
    ("Availability", ["FooBench is hosted on the Hugging Face hub.", "The code is available separately."]),
])
P1_MAIN = r"""\documentclass{article}
\usepackage{hyperref}
\begin{document}
\section{Introduction}
Recognizing foo in the wild remains difficult. % TODO \url{http://commented.example.org/x}
Existing collections are small and noisy.

\section{Availability}
We release our dataset at \href{https://huggingface.co/datasets/acme/foobench}{the FooBench hub page}. It is available at no cost. The training code is at \url{https://github.com/acme/foobench}. Please cite the paper if you use the data.
\bibliography{refs}
\end{document}
"""
P1_BIB = r"""@misc{foobench,
  title = {FooBench},
  howpublished = {\url{https://huggingface.co/datasets/acme/foobench/}},
  year = {2024}
}
"""

# 2403.00002: parse service answers 503, PDF text fallback, single gz'd .tex.
P2 = paper("2403.00002", 2, "A Corpus of Annotated Bar Dialogues",
           "We present a new corpus of bar dialogues. The corpus is publicly available.", ["cs.CL"])
P2_PDF_LINES = [
    "Bar conversations are an understudied genre.",
    "Our corpus consists of 3 sections recorded in 2023.",            # 2 + consists 3 = 5
    "The dataset contains 4,500 dialogues with 61,000 utterances.",   # 3 + count 2 = 5
    "We thank the bar staff.",
]
P2_TEX = r"""\section{Data}
Bar talk is informal. Speakers overlap often. All files are on Zenodo at \href{https://zenodo.org/record/123}{our data} for download. We evaluate on the test split of the dataset. Baseline scripts live in a separate repository. Contact the authors for questions.
"""

# 2403.00003: both candidates score below tau_min.
P3 = paper("2403.00003", 3, "Baz Scans: A Benchmark for Baz Detection",
           "We collect a new benchmark of baz scans. The benchmark is publicly available.", ["cs.CV", "cs.AI"])
P3_TEI = make_tei(P3["title"], [
    "We collect a new benchmark of baz scans.",  # 3
    "The benchmark is publicly available.",
], [
    ("Motivation", ["Baz detection matters for safety."]),
    ("Data", ["Our dataset contains 800 annotated scans.",  # 4 + 2 + 1 = 7
              "Scans come from two hospitals."]),
])
P3_MAIN = r"""\section{Data access}
The scans are available at \url{https://lab.example.edu/baz/download} for registered users. A mirror is listed on the project page \url{https://example.org/baz/data}.
"""

# 2403.00004: verifier times out; rule fallback prefers the Kaggle landing page.
P4 = paper("2403.00004", 4, "QuxSet: Tabular Records of Qux Sensors",
           "We release a new dataset of qux sensor readings. It is publicly available.", ["cs.DB"])
P4_TEI = make_tei(P4["title"], [
    "We release a new dataset of qux sensor readings.",  # 2
    "It is publicly available.",
], [
    ("Setting", ["Qux sensors are deployed in factories."]),
    ("Data", ["The dataset contains 2.5M records from 40 sites.",  # 3 + count 2 = 5
              "Readings are sampled every second.",
              "We release the data as CSV files split into 40 shards."]),  # 2 + 2 = 4
])
P4_MAIN = r"""\section{Release}
We release our dataset on Kaggle at \url{https://www.kaggle.com/datasets/qux/quxset}. A single archive is also on Figshare: \url{https://figshare.com/files/999/quxset.zip}. Our implementation is at \url{https://github.com/qux/quxset}.
"""
P4_BBL = r"""\begin{thebibliography}{1}
\bibitem{qux} Qux authors. \newblock QuxSet. \newblock \url{https://www.kaggle.com/datasets/qux/quxset}
\end{thebibliography}
"""

# 2403.00005-00007: gate negatives.
paper("2403.00005", 5, "Faster Sorting on GPUs",
      "We propose a faster sorting algorithm for GPUs. Experiments show large speedups.", ["cs.AI"])  # w=0
paper("2403.00006", 6, "On the Convergence of Adaptive Optimizers",
      "We analyze adaptive optimizers and prove convergence under mild assumptions. "
      "We evaluate on a standard dataset.", ["cs.LG", "cs.AI"])  # dataset 1
paper("2403.00007", 7, "Retrieval-Augmented Question Answering",
      "We study retrieval augmentation for question answering on an existing benchmark "
      "and an existing corpus.", ["cs.IR", "cs.CL"])  # benchmark 1 + corpus 1

# 2403.00008-00010: gate positive, no positive sentence.
P8 = paper("2403.00008", 8, "A New Dataset Pipeline for Web Tables",
           "We construct a new dataset of web tables and release tooling. The corpus is publicly available.",
           ["cs.DB"])
P8_TEI = make_tei(P8["title"], [
    "We construct a new dataset of web tables and release tooling.",
    "The corpus is publicly available.",
], [
    ("Method", ["Tables are extracted with a rule-based parser.", "We compare three parsers."]),
])
P8_MAIN = r"""Tooling lives at \url{https://github.com/tables/pipeline}.
"""

P9 = paper("2403.00009", 9, "Annotated Corpus Tools",
           "We release annotation tools for building a new corpus.", ["cs.CL"])
P9_PDF_LINES = ["Annotation tools reduce labeling time.", "We report a user study with 12 participants."]
P9_TEX = r"""Tools: \url{https://tools.example.org/annotate}.
"""

P10 = paper("2403.00010", 10, "Benchmark Report on Widget Ranking",
            "We introduce a benchmark for widget ranking and we collect judgments.", ["cs.IR"])
P10_TEI = make_tei(P10["title"], [
    "We introduce a benchmark for widget ranking and we collect judgments.",  # 3
], [
    ("Setup", ["Widget ranking is common in stores.",
               "Judgments come from crowd workers, see https://example.org/widgets for details."]),
])

# Filtered before any download: outside the window, outside the categories.
paper("2403.00011", 12, "A New Dataset of Old Things",
      "We introduce a new dataset and we release it.", ["cs.CL"], day="2024-02-28")
paper("2403.00012", 11, "A New Dataset of Graphs We Release",
      "We introduce a new dataset of graphs and we release it.", ["math.CO"])


def feed_xml():
    entries = []
    for p in sorted(PAPERS, key=lambda p: p["published"], reverse=True):
        cats = "".join('<category term="%s" scheme="http://arxiv.org/schemas/atom"/>' % c for c in p["cats"])
        entries.append(
            "<entry>\n"
            "<id>http://arxiv.org/abs/%sv1</id>\n"
            "<updated>%s</updated>\n<published>%s</published>\n"
            "<title>%s</title>\n<summary>  %s\n</summary>\n"
            "<author><name>A. Author</name></author>\n"
            '<arxiv:primary_category xmlns:arxiv="http://arxiv.org/schemas/atom" term="%s"/>\n%s\n'
            "</entry>" % (p["id"], p["published"], p["published"], xml_escape(p["title"]),
                          xml_escape(p["abstract"]), p["cats"][0], cats))
    return ('<?xml version="1.0" encoding="UTF-8"?>\n'
            '<feed xmlns="http://www.w3.org/2005/Atom">\n'
            "<title>arXiv Query</title>\n"
            '<opensearch:totalResults xmlns:opensearch="http://a9.com/-/spec/opensearch/1.1/">%d'
            "</opensearch:totalResults>\n%s\n</feed>\n" % (len(entries), "\n".join(entries)))


# ---- expected output ---------------------------------------------------------

def rec(pid, title, url, desc, cats, gate_w, link_score, reason):
    return {"paper_id": pid, "paper_url": "https://arxiv.org/abs/" + pid, "title": title, "dataset_url": url,
            "description": desc, "categories": cats, "gate_score": gate_w / (gate_w + 4.0),
            "link_score": link_score, "selection_reason": reason}


EXPECTED = [
    # gate: new dataset 3 + dataset 1 + we release 2 + annotated 1 = 7
    # HF: host 10 + /dataset 3 + lex+ (dataset, our dataset, we release, available at) 8 + code -2 = 19
    # GitHub: lex 8 - 2 + repo-root -4 = 2. Verifier picks HF.
    rec("2403.00001", P1["title"], "https://huggingface.co/datasets/acme/foobench",
        "Our dataset contains 12,000 annotated images of foo. We collect 12,000 images from public webcams.",
        ["cs.CV"], 7, 19, "llm_choice"),
    # gate: new corpus 3 + corpus 1 + publicly available 1 + annotated 1 = 6
    # Zenodo: host 9 + /record 2 + dataset 2 + special -3 = 10, single candidate, verifier uncertain
    rec("2403.00002", P2["title"], "https://zenodo.org/record/123",
        "Our corpus consists of 3 sections recorded in 2023. "
        "The dataset contains 4,500 dialogues with 61,000 utterances.",
        ["cs.CL"], 6, 10, "llm_fallback"),
    # gate: we collect 2 + new benchmark 2 + benchmark 1 + publicly available 1 = 6
    # lab: /download 2 + available at 2 = 4; mirror: /data 2 + 2 = 4; shorter URL wins, 4 < 15
    rec("2403.00003", P3["title"], None, "Our dataset contains 800 annotated scans.",
        ["cs.CV", "cs.AI"], 6, None, "rejected_below_min"),
    # gate: new dataset 3 + dataset 1 + we release 2 + publicly available 1 = 7
    # Kaggle: 8 + /dataset 3 + lex+ 6 - implementation 2 = 15
    # Figshare: 8 + /files 2 + .zip 5 + 6 - 2 = 19; GitHub 0 dropped.
    # 19 < 22, margin 4 < 5, Kaggle is the first landing page on a dataset host, 15 >= tau_min.
    rec("2403.00004", P4["title"], "https://www.kaggle.com/datasets/qux/quxset",
        "The dataset contains 2.5M records from 40 sites.", ["cs.DB"], 7, 15, "llm_fallback"),
]

# paper id -> disposition after a full run
EXPECTED_DISPOSITIONS = {
    "2403.00001": "record_written", "2403.00002": "record_written",
    "2403.00003": "record_written", "2403.00004": "record_written",
    "2403.00005": "gate_negative", "2403.00006": "gate_negative", "2403.00007": "gate_negative",
    "2403.00008": "reclassified_negative", "2403.00009": "reclassified_negative",
    "2403.00010": "reclassified_negative",
}


def main():
    routes = [{"method": "GET", "url": FEED_PREFIX, "match": "prefix", "file": "feed.xml",
               "content_type": "application/atom+xml"}]

    def pdf_route(p, lines, replies_before=()):
        name = "pdf/%s.pdf" % p["id"]
        write(name, make_pdf(p["id"] + ": " + p["title"], lines))
        replies = list(replies_before) + [{"file": name, "content_type": "application/pdf"}]
        routes.append({"method": "GET", "url": "https://arxiv.org/pdf/" + p["id"], "replies": replies})

    def src_route(p, body, content_type):
        ext = ".tar.gz" if content_type == "application/x-eprint-tar" else ".gz"
        name = "src/%s%s" % (p["id"], ext)
        write(name, body)
        routes.append({"method": "GET", "url": "https://arxiv.org/e-print/" + p["id"], "file": name,
                       "content_type": content_type})

    def tei_route(p, tei):
        name = "tei/%s.tei.xml" % p["id"]
        write(name, tei)
        routes.append({"method": "POST", "url": GROBID + "/api/processFulltextDocument", "body_contains": p["id"],
                       "file": name, "content_type": "application/xml"})

    write("feed.xml", feed_xml())

    pdf_route(P1, ["FooBench body text."])
    tei_route(P1, P1_TEI)
    src_route(P1, make_tar_gz([("main.tex", P1_MAIN), ("refs.bib", P1_BIB), ("figure.png", b"\x89PNG\r\n")]),
              "application/x-eprint-tar")

    pdf_route(P2, P2_PDF_LINES)
    routes.append({"method": "POST", "url": GROBID + "/api/processFulltextDocument", "body_contains": P2["id"],
                   "status": 503})
    src_route(P2, gz(P2_TEX.encode()), "application/x-eprint")

    # one transient failure before the PDF arrives
    pdf_route(P3, ["Baz body text."], replies_before=[{"status": 503}])
    tei_route(P3, P3_TEI)
    src_route(P3, make_tar_gz([("./main.tex", P3_MAIN)]), "application/x-eprint-tar")

    pdf_route(P4, ["Qux body text."])
    tei_route(P4, P4_TEI)
    long_name = "paper/" + "appendix_" * 12 + ".tex"
    src_route(P4, make_tar_gz([("paper/main.tex", P4_MAIN), ("paper/main.bbl", P4_BBL), (long_name, "Nothing here.\n")],
                              fmt=tarfile.GNU_FORMAT), "application/x-eprint-tar")

    pdf_route(P8, ["Tables body text."])
    tei_route(P8, P8_TEI)
    src_route(P8, make_tar_gz([("main.tex", P8_MAIN)]), "application/x-eprint-tar")

    pdf_route(P9, P9_PDF_LINES)
    src_route(P9, gz(P9_TEX.encode()), "application/x-eprint")

    pdf_route(P10, ["Widget body text."])
    tei_route(P10, P10_TEI)
    routes.append({"method": "GET", "url": "https://arxiv.org/e-print/" + P10["id"], "status": 404})

    routes += [
        {"method": "POST", "url": VERIFIER, "body_contains": "acme/foobench",
         "body": json.dumps({"choice": "https://huggingface.co/datasets/acme/foobench"}),
         "content_type": "application/json"},
        {"method": "POST", "url": VERIFIER, "body_contains": "zenodo.org/record/123",
         "body": json.dumps({"choice": "uncertain"}), "content_type": "application/json"},
        {"method": "POST", "url": VERIFIER, "body_contains": "qux/quxset", "failure": "timeout"},
    ]

    write("manifest.json", json.dumps({"routes": routes}, indent=1) + "\n")
    write("config.json", json.dumps({
        "crawl": {"window_start": "2024-03-01T00:00:00Z", "window_end": "2024-03-02T00:00:00Z", "worker_count": 3},
        "docparse": {"service_url": GROBID},
        "link": {"mode": "hybrid", "verifier_url": VERIFIER, "verifier_enabled": True},
    }, indent=1) + "\n")
    write("expected_records.jsonl", "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in EXPECTED))
    write("expected_dispositions.json", json.dumps(EXPECTED_DISPOSITIONS, indent=1, sort_keys=True) + "\n")


# ---- unit fixtures -----------------------------------------------------------

UNIT = os.path.join(HERE, "unit")


def entry(pid, published, title, abstract, cats):
    id_el = "<id>http://arxiv.org/abs/%sv2</id>" % pid if pid else ""
    return ("<entry>%s<published>%s</published><title>%s</title><summary>%s</summary>%s</entry>"
            % (id_el, published, title, abstract,
               "".join('<category term="%s"/>' % c for c in cats)))


def feed(entries):
    return '<?xml version="1.0"?>\n<feed xmlns="http://www.w3.org/2005/Atom">\n%s\n</feed>\n' % "\n".join(entries)


def unit_fixtures():
    # 3 cs.CL (one also cs.IR), 2 cs.CV
    write("feeds/categories.xml", feed([
        entry("2401.00005", "2024-01-10T05:00:00Z", "CV two", "Abstract five.", ["cs.CV"]),
        entry("2401.00004", "2024-01-10T04:00:00Z", "CL three", "Abstract four.", ["cs.CL", "cs.IR"]),
        entry("2401.00003", "2024-01-10T03:00:00Z", "CV one", "Abstract three.", ["cs.CV", "cs.LG"]),
        entry("2401.00002", "2024-01-10T02:00:00Z", "CL two", "Abstract two.", ["cs.CL"]),
        entry("2401.00001", "2024-01-10T01:00:00Z", "CL one", "Abstract one.", ["cs.CL"]),
    ]), UNIT)
    # the same paper as v1 and v2, listed under cs.CL and cs.IR
    write("feeds/duplicate.xml", feed([
        entry("2401.00009", "2024-01-11T01:00:00Z", "Twice", "Listed twice.", ["cs.CL", "cs.IR"]),
        entry("2401.00009", "2024-01-11T01:00:00Z", "Twice", "Listed twice.", ["cs.IR", "cs.CL"]),
    ]), UNIT)
    # 2 well-formed, 1 without an id; the first abstract has a line break
    write("feeds/idless.xml", feed([
        entry("2401.00011", "2024-01-12T01:00:00Z", "  Spaced\n  title ",
              "First line\n   second line.", ["cs.AI"]),
        entry(None, "2024-01-12T02:00:00Z", "No id", "Nothing.", ["cs.AI"]),
        entry("2401.00012", "2024-01-12T03:00:00Z", "Second", "Fine.", ["cs.AI"]),
    ]), UNIT)
    write("feeds/empty.xml", feed([]), UNIT)

    write("docparse/two_page.pdf", make_pdf("two pages", None, pages=[
        ["Page one opens here.", "It has two lines."],
        ["Page two closes (the) document."],
    ]), UNIT)
    write("docparse/one_sentence.pdf", make_pdf("one", ["Only one sentence lives here."]), UNIT)
    # 3 sentences once the splitter has handled "e.g." and "Fig. 2"
    write("docparse/three_sentences.pdf", make_pdf("three", [
        "We study tables, e.g. invoices and receipts.",
        "Fig. 2 shows the layout of a receipt.",
        "The results are encouraging!",
    ]), UNIT)
    fourteen = ["Sentence number %d is here." % i for i in range(1, 15)]
    write("docparse/fourteen.tei.xml", make_tei("Fourteen", fourteen[:2],
                                                [("Intro", fourteen[2:8]), ("Method", fourteen[8:])]), UNIT)
    # a TEI body without <s> segmentation
    write("docparse/paragraphs.tei.xml",
          '<TEI xmlns="http://www.tei-c.org/ns/1.0"><text><body><div><head>Intro</head>'
          "<p>First one. Second one follows.</p><p>Third one.</p></div></body></text></TEI>\n", UNIT)

    write("source/paper.tar.gz", make_tar_gz([
        ("main.tex", P1_MAIN), ("refs.bib", P1_BIB), ("fig/plot.pdf", b"%PDF-1.4 not really")]), UNIT)
    write("source/single.gz", gz(P2_TEX.encode()), UNIT)


if __name__ == "__main__":
    main()
    unit_fixtures()
