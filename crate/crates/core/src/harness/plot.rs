use super::config::Experiment;

const HEADER: &str = "import csv\nfrom collections import defaultdict\n\nimport matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n\ndef rows(path):\n    with open(path, newline=\"\") as f:\n        return list(csv.DictReader(f))\n\n\n";

/// Matplotlib script that renders the CSVs of one run into PNGs next to them.
pub(crate) fn script(experiment: Experiment, outputs: &[String]) -> String {
    let csvs: Vec<&str> = outputs.iter().filter(|o| o.ends_with(".csv")).map(String::as_str).collect();
    let files = csvs.iter().map(|c| format!("    {c:?},\n")).collect::<String>();
    let body = match experiment {
        Experiment::Design => DESIGN,
        Experiment::Scan => SCAN,
        Experiment::Reconstruct => RECONSTRUCT,
        Experiment::Table => TABLE,
    };
    format!("{HEADER}FILES = [\n{files}]\n\n{body}")
}

const DESIGN: &str = r#"for name in FILES:
    data = rows(name)
    fig, ax = plt.subplots(figsize=(7, 4))
    for r in data:
        n = int(r["n"])
        lo = float(r["lower_edge_rad_s"]) / 6283.185307179586
        hi = float(r["upper_edge_rad_s"]) / 6283.185307179586
        ax.plot([lo, hi], [n, n], lw=3)
        ax.plot(float(r["peak_rad_s"]) / 6283.185307179586, n, "k|")
    ax.set_xlabel("frequency (kHz)")
    ax.set_ylabel("filter n")
    fig.tight_layout()
    fig.savefig(name.replace(".csv", ".png"), dpi=150)
"#;

const SCAN: &str = r#"data = rows(FILES[0])
curves = defaultdict(lambda: ([], []))
for r in data:
    key = r["protocol"] + " " + r["method"]
    curves[key][0].append(float(r["nu_rad_s"]) / 6283.185307179586)
    curves[key][1].append(float(r["fidelity"]))
fig, ax = plt.subplots(figsize=(7, 4))
for key, (x, y) in curves.items():
    ax.plot(x, y, "o-", ms=3, label=key)
ax.set_xlabel("noise peak (kHz)")
ax.set_ylabel("fidelity")
ax.set_ylim(0, 1.02)
ax.legend()
fig.tight_layout()
fig.savefig("scan.png", dpi=150)
"#;

const RECONSTRUCT: &str = r#"fig, axes = plt.subplots(len(FILES), 1, figsize=(7, 2.6 * len(FILES)), sharex=True, squeeze=False)
for ax, name in zip(axes[:, 0], FILES):
    data = rows(name)
    x = [float(r["omega_rad_s"]) / 6283.185307179586 for r in data]
    ax.plot(x, [float(r["s_true"]) for r in data], "k-", label="S")
    ax.plot(x, [float(r["s_hat"]) for r in data], "r-", label="estimate")
    ax.set_title(name[len("reconstruct_"):-4])
    ax.legend()
axes[-1, 0].set_xlabel("frequency (kHz)")
fig.tight_layout()
fig.savefig("reconstruct.png", dpi=150)
"#;

const TABLE: &str = r#"data = rows(FILES[0])
curves = defaultdict(lambda: ([], [], []))
for r in data:
    key = r["protocol"] + " " + r["method"]
    curves[key][0].append(int(r["samples"]))
    curves[key][1].append(float(r["fidelity_mean"]))
    curves[key][2].append(float(r["fidelity_std"]))
fig, ax = plt.subplots(figsize=(7, 4))
for key, (x, y, e) in curves.items():
    ax.errorbar(x, y, yerr=e, capsize=3, marker="o", label=key)
ax.set_xscale("log")
ax.set_xlabel("samples per filter")
ax.set_ylabel("mean fidelity")
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig("table.png", dpi=150)
"#;
