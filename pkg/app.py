import sys

from nonnoether import create_app, run

app = create_app()

if __name__ == '__main__':
    sys.exit(run(app))
