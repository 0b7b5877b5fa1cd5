"""Write documentation."""

import json

from acstab.checks import CHECKS
from acstab.cli import COMMANDS

strings = json.load(open("acstab/strings.json"))

output = []
for description in CHECKS:
    summary = description.summary.replace("|", "\\|")
    output.append(f"|`{description.key}`|{summary}|")

commands = []
for name, (_, help_text) in COMMANDS.items():
    commands.append(f"|`acstab {name}`|{help_text}|")

# write output to file
with open("documentation.md", "w") as f:
    f.write("## Commands\n\n")
    f.write("|Command|Output|\n")
    f.write("|---|---|\n")
    f.write("\n".join(commands))
    f.write("\n\n## Checks\n\n")
    f.write("|Check|Passes when|\n")
    f.write("|---|---|\n")
    f.write("\n".join(output))
    f.write("\n\n## Errors\n\n")
    f.write("|Key|Message|\n")
    f.write("|---|---|\n")
    f.write(
        "\n".join(
            f"|`{key}`|{value['message']}|"
            for key, value in sorted(strings["exceptions"].items())
        )
    )
    f.write("\n")

# Check for unused
for key in strings["exceptions"]:
    used = False
    for path in ("acstab/exceptions.py", "acstab/config.py", "acstab/helpers.py",
                 "acstab/green.py", "acstab/qgraph.py", "acstab/spectral.py",
                 "acstab/checks.py", "acstab/diagnostics.py"):
        if f'"{key}"' in open(path).read():
            used = True
    if not used:
        print(f"UNUSED: {key}")
