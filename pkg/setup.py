#!/usr/bin/env python3
import sys
import venv
import subprocess
from pathlib import Path


def print_step(message):
    """Print a formatted step message."""
    print(f"\n{'=' * 80}\n{message}\n{'=' * 80}")


def run_command(command, check=True):
    """Run a shell command and handle errors."""
    try:
        subprocess.run(command, shell=True, check=check)
        return True
    except subprocess.CalledProcessError as e:
        print(f"Error running command: {command}")
        print(f"Error details: {e}")
        return False


def main():
    project_root = Path.cwd()

    print_step("Starting TTQL Experiments Setup")

    print_step("Checking system requirements...")
    if sys.version_info < (3, 9):
        print(f"Python 3.9 or newer is required, found {sys.version.split()[0]}")
        sys.exit(1)

    print_step("Creating directory structure...")
    for directory in ["configs", "results", "docs"]:
        Path(project_root / directory).mkdir(parents=True, exist_ok=True)

    print_step("Creating Python virtual environment...")
    venv_dir = project_root / "venv"
    venv.create(venv_dir, with_pip=True)

    print_step("Installing Python dependencies...")
    pip_path = venv_dir / "bin" / "pip"
    if not run_command(f"{pip_path} install -r requirements.txt"):
        sys.exit(1)
    run_command(f"{pip_path} install -r requirements-dev.txt")
    run_command(f"{venv_dir / 'bin' / 'pre-commit'} install", check=False)

    print_step("Creating .env template...")
    env_template = """# Logging
TTQL_LOG_LEVEL=INFO

# Parallel workers for experiment suites
TTQL_WORKERS=1

# Output and solver defaults
TTQL_OUTPUT_DIR=results
TTQL_SOLVER_TOL=1e-8"""

    with open(project_root / ".env.template", "w") as f:
        f.write(env_template)

    print_step("Setup completed!")
    print("\nNext steps:")
    print("1. Optionally copy .env.template to .env and adjust the settings")
    print("2. Run the tests: venv/bin/pytest")
    print("3. Run the experiment suites: ./run-suites.sh")


if __name__ == "__main__":
    main()
