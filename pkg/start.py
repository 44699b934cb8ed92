#!/usr/bin/env python3
"""
Startup script for the Steam game-network toolkit
Checks dependencies, prepares the offline fixture and runs the pipeline,
or starts the API server with --serve
"""

import subprocess
import sys
import os
import time
import codecs
from pathlib import Path

import requests

# Fix Unicode encoding for Windows
if sys.platform == 'win32':
    sys.stdout = codecs.getwriter('utf-8')(sys.stdout.buffer, 'strict')
    sys.stderr = codecs.getwriter('utf-8')(sys.stderr.buffer, 'strict')

FIXTURE_DIR = Path("data/fixture")
BACKEND_DIR = Path(__file__).resolve().parent / "backend"


class Colors:
    HEADER = '\033[95m'
    OKBLUE = '\033[94m'
    OKCYAN = '\033[96m'
    OKGREEN = '\033[92m'
    WARNING = '\033[93m'
    FAIL = '\033[91m'
    ENDC = '\033[0m'
    BOLD = '\033[1m'


def print_header(text):
    print(f"\n{Colors.HEADER}{Colors.BOLD}{'=' * 70}{Colors.ENDC}")
    print(f"{Colors.HEADER}{Colors.BOLD}{text.center(70)}{Colors.ENDC}")
    print(f"{Colors.HEADER}{Colors.BOLD}{'=' * 70}{Colors.ENDC}\n")


def print_success(text):
    print(f"{Colors.OKGREEN}✅ {text}{Colors.ENDC}")


def print_error(text):
    print(f"{Colors.FAIL}❌ {text}{Colors.ENDC}")


def print_warning(text):
    print(f"{Colors.WARNING}⚠️  {text}{Colors.ENDC}")


def print_info(text):
    print(f"{Colors.OKCYAN}ℹ️  {text}{Colors.ENDC}")


def check_python_version():
    """Check Python version"""
    print_info("Checking Python version...")
    version = sys.version_info
    if version.major >= 3 and version.minor >= 10:
        print_success(f"Python {version.major}.{version.minor}.{version.micro}")
        return True
    else:
        print_error(f"Python 3.10+ required. Found: {version.major}.{version.minor}")
        return False


def check_dependencies():
    """Check if all dependencies are installed"""
    print_info("Checking dependencies...")

    required = {
        'fastapi': 'fastapi',
        'uvicorn': 'uvicorn',
        'pydantic': 'pydantic',
        'python-dotenv': 'dotenv',
        'requests': 'requests',
        'numpy': 'numpy',
        'scipy': 'scipy',
        'networkx': 'networkx',
        'scikit-learn': 'sklearn',
        'pandas': 'pandas',
        'python-dateutil': 'dateutil',
    }

    missing = []
    for pip_name, import_name in required.items():
        try:
            __import__(import_name)
        except ImportError:
            missing.append(pip_name)

    if missing:
        print_error(f"Missing packages: {', '.join(missing)}")
        print_info("Run: pip install -r requirements.txt")
        return False
    else:
        print_success("All dependencies installed")
        return True


def check_env_file():
    """Check if .env file exists"""
    print_info("Checking configuration...")

    if Path('.env').exists():
        print_success(".env file exists")
        return True
    if Path('.env.example').exists():
        import shutil
        shutil.copy('.env.example', '.env')
        print_success("Created .env from .env.example")
        return True
    print_warning(".env file not found; using defaults")
    return True


def check_api_key():
    """The Steam key only matters for live crawls"""
    print_info("Checking Steam API key...")
    from dotenv import load_dotenv
    load_dotenv()

    if os.getenv('STEAM_API_KEY'):
        print_success("Steam API key found (live mode available)")
    else:
        print_warning("No STEAM_API_KEY set; only fixture mode is available")
    return True


def create_directories():
    """Create necessary directories"""
    print_info("Creating directories...")

    for directory in ['data/cache', 'data/run', 'logs']:
        Path(directory).mkdir(parents=True, exist_ok=True)

    print_success("Directories created")
    return True


def run_cli(*args):
    """Run backend/cli.py with the given arguments, return its exit code"""
    command = [sys.executable, str(BACKEND_DIR / "cli.py"), *args]
    print_info("Running: " + " ".join(command[1:]))
    return subprocess.call(command, env=dict(os.environ, PYTHONIOENCODING='utf-8'))


def prepare_fixture():
    config = FIXTURE_DIR / "config.json"
    if config.exists():
        print_success(f"Fixture found at {FIXTURE_DIR}")
        return True
    print_info(f"Writing synthetic fixture to {FIXTURE_DIR}...")
    return run_cli("make-fixture", str(FIXTURE_DIR.resolve())) == 0


def run_pipeline():
    print_header("RUNNING PIPELINE")
    start = time.time()
    code = run_cli("--config", str((FIXTURE_DIR / "config.json").resolve()), "pipeline")
    if code == 0:
        print_success(f"Pipeline finished in {time.time() - start:.1f}s")
        print_info(f"Report: {FIXTURE_DIR / 'run' / 'report' / 'summary.md'}")
    else:
        print_error(f"Pipeline failed with exit code {code}")
    return code


def start_backend():
    """Start FastAPI backend using uvicorn CLI"""
    print_info("Starting backend server...")

    backend_process = subprocess.Popen(
        [
            sys.executable, "-m", "uvicorn",
            "app:app",
            "--host", "127.0.0.1",
            "--port", "8000",
            "--log-level", "info",
            "--no-access-log"
        ],
        cwd=str(BACKEND_DIR),
        env=dict(os.environ, PYTHONIOENCODING='utf-8')
    )

    print_info("Waiting for backend to start...")
    for i in range(60):
        try:
            response = requests.get("http://127.0.0.1:8000/health", timeout=5)
            if response.status_code == 200:
                print_success("Backend server started on http://127.0.0.1:8000")
                return backend_process
        except requests.exceptions.ConnectionError:
            pass

        if backend_process.poll() is not None:
            break
        if i > 0 and i % 10 == 0:
            print_info(f"Still waiting for backend... ({i}s)")
        time.sleep(1)

    print_error("Backend failed to start within 60 seconds")
    backend_process.terminate()
    return None


def main():
    """Main startup function"""
    print_header("STEAM GAME NETWORKS - STARTUP")

    checks = [
        ("Python Version", check_python_version),
        ("Dependencies", check_dependencies),
        ("Configuration", check_env_file),
        ("Directories", create_directories),
        ("Steam API Key", check_api_key),
    ]

    print_header("PRE-FLIGHT CHECKS")

    all_passed = True
    for name, check_func in checks:
        if not check_func() and name in ["Python Version", "Dependencies"]:
            all_passed = False

    if not all_passed:
        print("\n" + "=" * 70)
        print_error("Critical checks failed. Please fix the issues above.")
        print("=" * 70)
        return 1

    if "--serve" not in sys.argv[1:]:
        if not prepare_fixture():
            return 1
        return run_pipeline()

    print_header("STARTING SERVICES")
    backend_process = start_backend()
    if not backend_process:
        return 1

    print()
    print(f"{Colors.BOLD}Access the application:{Colors.ENDC}")
    print(f"  🔌 Backend:   http://localhost:8000")
    print(f"  📚 API Docs:  http://localhost:8000/docs")
    print()
    print(f"{Colors.WARNING}Press Ctrl+C to stop{Colors.ENDC}")
    print("=" * 70)

    try:
        backend_process.wait()
    except KeyboardInterrupt:
        print_info("Shutting down...")
        backend_process.terminate()
        backend_process.wait(timeout=30)
        print_success("Server stopped")
    return 0


if __name__ == "__main__":
    sys.exit(main())
